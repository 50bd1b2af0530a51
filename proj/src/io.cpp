#include "v2p/io.hpp"

#include "v2p/error.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

namespace v2p {

namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Cursor {
    std::string_view bytes;
    std::size_t off = 0;

    void need(std::size_t n) const {
        if (off + n > bytes.size()) throw DataError("truncated binary data");
    }
    std::uint32_t get_u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
        }
        off += 4;
        return v;
    }
    double get_f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
        }
        off += 8;
        return std::bit_cast<double>(v);
    }
    bool done() const { return off == bytes.size(); }
};

/// Shortest representation that parses back to the same double.
void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

std::filesystem::path sibling_temp(const std::filesystem::path& target) {
    static std::atomic<unsigned> counter{0};
    auto parent = target.parent_path();
    if (parent.empty()) parent = ".";
    return parent / (".tmp-" + target.filename().string() + "-" + std::to_string(::getpid()) +
                     "-" + std::to_string(counter.fetch_add(1)));
}

std::string sample_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu.bin", index);
    return buf;
}

json require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
    return j.at(key);
}

} // namespace

GridValues to_grid_values(const LabelMap& m) {
    return {m.grid.rows, m.grid.cols, m.values};
}

GridValues to_grid_values(const AttentionMap& m) {
    return {m.grid.rows, m.grid.cols, m.probs};
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw DataError("failed reading file: " + path.string());
    return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    const std::filesystem::path temp = sibling_temp(path);
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot create file: " + temp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(temp, ec);
            throw DataError("failed writing file: " + temp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::error_code ec2;
        std::filesystem::remove(temp, ec2);
        throw DataError("cannot move " + temp.string() + " to " + path.string() + ": " +
                        ec.message());
    }
}

std::string encode_grid_binary(const GridValues& g) {
    if (g.values.size() != static_cast<std::size_t>(g.rows) * g.cols) {
        throw std::invalid_argument("grid value count does not match rows*cols");
    }
    std::string out;
    out.reserve(8 + 8 * g.values.size());
    put_u32(out, g.rows);
    put_u32(out, g.cols);
    for (double v : g.values) put_f64(out, v);
    return out;
}

GridValues decode_grid_binary(std::string_view bytes) {
    Cursor c{bytes};
    GridValues g;
    g.rows = c.get_u32();
    g.cols = c.get_u32();
    const std::size_t n = static_cast<std::size_t>(g.rows) * g.cols;
    if (bytes.size() != 8 + 8 * n) {
        throw DataError("grid file size does not match its header");
    }
    g.values.resize(n);
    for (double& v : g.values) v = c.get_f64();
    return g;
}

std::string encode_grid_csv(const GridValues& g) {
    if (g.values.size() != static_cast<std::size_t>(g.rows) * g.cols) {
        throw std::invalid_argument("grid value count does not match rows*cols");
    }
    std::string out;
    for (std::uint32_t r = 0; r < g.rows; ++r) {
        for (std::uint32_t c = 0; c < g.cols; ++c) {
            if (c > 0) out.push_back(',');
            append_double(out, g.values[static_cast<std::size_t>(r) * g.cols + c]);
        }
        out.push_back('\n');
    }
    return out;
}

GridValues decode_grid_csv(std::string_view text) {
    GridValues g;
    std::size_t pos = 0;
    std::size_t cols = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        std::size_t row_cols = 0;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos) comma = line.size();
            const std::string_view tok = line.substr(start, comma - start);
            double v = 0.0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
                throw DataError("bad CSV value '" + std::string(tok) + "' at row " +
                                std::to_string(g.rows + 1));
            }
            g.values.push_back(v);
            ++row_cols;
            start = comma + 1;
            if (comma == line.size()) break;
        }
        if (cols == 0) cols = row_cols;
        else if (row_cols != cols) {
            throw DataError("CSV rows have unequal lengths");
        }
        ++g.rows;
    }
    g.cols = static_cast<std::uint32_t>(cols);
    return g;
}

GridValues read_grid(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    if (path.extension() == ".csv") return decode_grid_csv(bytes);
    return decode_grid_binary(bytes);
}

std::string heatmap_ppm(const GridValues& g, std::uint32_t cell_pixels) {
    if (g.rows == 0 || g.cols == 0 || cell_pixels == 0) {
        throw std::invalid_argument("heatmap needs a non-empty grid and cell size");
    }
    if (g.values.size() != static_cast<std::size_t>(g.rows) * g.cols) {
        throw std::invalid_argument("grid value count does not match rows*cols");
    }
    double max = 0.0;
    for (double v : g.values) max = std::max(max, v);

    const std::uint32_t w = g.cols * cell_pixels;
    const std::uint32_t h = g.rows * cell_pixels;
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(w) * h * 3);
    for (std::uint32_t y = 0; y < h; ++y) {
        const std::uint32_t row = y / cell_pixels;
        for (std::uint32_t x = 0; x < w; ++x) {
            const std::uint32_t col = x / cell_pixels;
            double t = 0.0;
            if (max > 0.0) {
                t = g.values[static_cast<std::size_t>(row) * g.cols + col] / max;
                t = std::clamp(t, 0.0, 1.0);
            }
            const auto red = static_cast<unsigned char>(std::lround(255.0 * t));
            const auto blue = static_cast<unsigned char>(std::lround(255.0 * (1 - t)));
            out.push_back(static_cast<char>(red));
            out.push_back('\0');
            out.push_back(static_cast<char>(blue));
        }
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& data_path, const HeadParameters& params,
                     const nlohmann::json& hyperparameters) {
    const std::vector<double> flat = params.flatten();
    std::string bytes;
    bytes.reserve(8 * flat.size());
    for (double v : flat) put_f64(bytes, v);
    write_file(data_path, bytes);

    json side;
    side["format"] = "grounding-head";
    side["version"] = 1;
    side["feature_dim"] = params.config.feature_dim;
    side["query_dim"] = params.config.query_dim;
    side["hidden_dim"] = params.config.hidden_dim;
    side["embed_dim"] = params.config.embed_dim;
    side["seed"] = params.config.seed;
    side["parameter_count"] = flat.size();
    side["hyperparameters"] = hyperparameters;
    write_file(data_path.string() + ".json", side.dump(2) + "\n");
}

HeadParameters load_checkpoint(const std::filesystem::path& data_path) {
    const std::string side_path = data_path.string() + ".json";
    json side;
    try {
        side = json::parse(read_file(side_path));
    } catch (const json::exception& e) {
        throw DataError("bad checkpoint sidecar " + side_path + ": " + e.what());
    }
    HeadConfig cfg;
    cfg.feature_dim = require(side, "feature_dim", side_path).get<std::size_t>();
    cfg.query_dim = require(side, "query_dim", side_path).get<std::size_t>();
    cfg.hidden_dim = require(side, "hidden_dim", side_path).get<std::size_t>();
    cfg.embed_dim = require(side, "embed_dim", side_path).get<std::size_t>();
    cfg.seed = require(side, "seed", side_path).get<std::uint64_t>();
    if (cfg.feature_dim == 0 || cfg.query_dim == 0 || cfg.hidden_dim == 0 ||
        cfg.embed_dim == 0) {
        throw DataError("bad checkpoint sidecar " + side_path + ": zero dimension");
    }
    HeadParameters params = init_head(cfg);

    const std::string bytes = read_file(data_path);
    const std::size_t expect = params.parameter_count();
    if (bytes.size() != 8 * expect) {
        throw DataError("checkpoint " + data_path.string() + " holds " +
                        std::to_string(bytes.size() / 8) + " values, sidecar shapes need " +
                        std::to_string(expect));
    }
    Cursor c{bytes};
    std::vector<double> flat(expect);
    for (double& v : flat) v = c.get_f64();
    params.unflatten(flat);
    return params;
}

namespace {

json range_json(const SizeRange& r) { return json::array({r.min_side, r.max_side}); }

SizeRange range_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw DataError(where + ": bad size range");
    return {j[0].get<double>(), j[1].get<double>()};
}

std::string encode_sample(const GroundingSample& s) {
    std::string out;
    out.reserve(7 * 4 + 8 * (4 + 4 * s.distractors.size() + s.query.size() + s.feats.data.size()));
    put_u32(out, s.grid.image_width);
    put_u32(out, s.grid.image_height);
    put_u32(out, s.grid.patch_size);
    put_u32(out, static_cast<std::uint32_t>(s.feats.dim));
    put_u32(out, static_cast<std::uint32_t>(s.query.size()));
    put_u32(out, static_cast<std::uint32_t>(s.size_class));
    put_u32(out, static_cast<std::uint32_t>(s.distractors.size()));
    for (double v : {s.target.x1, s.target.y1, s.target.x2, s.target.y2}) put_f64(out, v);
    for (const BoundingBox& b : s.distractors) {
        for (double v : {b.x1, b.y1, b.x2, b.y2}) put_f64(out, v);
    }
    for (double v : s.query) put_f64(out, v);
    for (double v : s.feats.data) put_f64(out, v);
    return out;
}

GroundingSample decode_sample(std::string_view bytes, const std::string& where) {
    Cursor c{bytes};
    GroundingSample s;
    const std::uint32_t iw = c.get_u32();
    const std::uint32_t ih = c.get_u32();
    const std::uint32_t ps = c.get_u32();
    const std::uint32_t feature_dim = c.get_u32();
    const std::uint32_t query_dim = c.get_u32();
    const std::uint32_t cls = c.get_u32();
    const std::uint32_t n_distractors = c.get_u32();
    if (cls > 2) throw DataError(where + ": bad size class " + std::to_string(cls));
    try {
        s.grid = PatchGrid(iw, ih, ps);
        const double x1 = c.get_f64(), y1 = c.get_f64(), x2 = c.get_f64(), y2 = c.get_f64();
        s.target = BoundingBox(x1, y1, x2, y2);
        s.distractors.reserve(n_distractors);
        for (std::uint32_t i = 0; i < n_distractors; ++i) {
            const double a = c.get_f64(), b = c.get_f64(), d = c.get_f64(), e = c.get_f64();
            s.distractors.emplace_back(a, b, d, e);
        }
    } catch (const std::invalid_argument& e) {
        throw DataError(where + ": " + e.what());
    }
    s.size_class = static_cast<SizeClass>(cls);
    s.query.resize(query_dim);
    for (double& v : s.query) v = c.get_f64();
    s.feats = PatchFeatures(s.grid.patch_count(), feature_dim);
    for (double& v : s.feats.data) v = c.get_f64();
    if (!c.done()) throw DataError(where + ": trailing bytes");
    return s;
}

} // namespace

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = "grounding-corpus";
    manifest["version"] = 1;
    manifest["count"] = corpus.samples.size();
    json cfg;
    cfg["image_width"] = corpus.config.image_width;
    cfg["image_height"] = corpus.config.image_height;
    cfg["patch_size"] = corpus.config.patch_size;
    cfg["elements_per_scene"] = corpus.config.elements_per_scene;
    cfg["small_range"] = range_json(corpus.config.small_range);
    cfg["medium_range"] = range_json(corpus.config.medium_range);
    cfg["large_range"] = range_json(corpus.config.large_range);
    cfg["feature_dim"] = corpus.config.feature_dim;
    cfg["query_dim"] = corpus.config.query_dim;
    cfg["sigma_noise"] = corpus.config.sigma_noise;
    cfg["seed"] = corpus.config.seed;
    manifest["config"] = std::move(cfg);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
        write_file(dir / sample_file_name(i), encode_sample(corpus.samples[i]));
    }
}

Corpus load_corpus(const std::filesystem::path& dir) {
    const std::filesystem::path manifest_path = dir / "manifest.json";
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw DataError("bad corpus manifest " + manifest_path.string() + ": " + e.what());
    }
    const std::string where = manifest_path.string();
    const std::size_t count = require(manifest, "count", where).get<std::size_t>();
    const json cfg = require(manifest, "config", where);

    Corpus corpus;
    corpus.config.image_width = require(cfg, "image_width", where).get<std::uint32_t>();
    corpus.config.image_height = require(cfg, "image_height", where).get<std::uint32_t>();
    corpus.config.patch_size = require(cfg, "patch_size", where).get<std::uint32_t>();
    corpus.config.elements_per_scene =
        require(cfg, "elements_per_scene", where).get<std::uint32_t>();
    corpus.config.small_range = range_from_json(require(cfg, "small_range", where), where);
    corpus.config.medium_range = range_from_json(require(cfg, "medium_range", where), where);
    corpus.config.large_range = range_from_json(require(cfg, "large_range", where), where);
    corpus.config.feature_dim = require(cfg, "feature_dim", where).get<std::uint32_t>();
    corpus.config.query_dim = require(cfg, "query_dim", where).get<std::uint32_t>();
    corpus.config.sigma_noise = require(cfg, "sigma_noise", where).get<double>();
    corpus.config.seed = require(cfg, "seed", where).get<std::uint64_t>();
    try {
        corpus.config.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(where + ": " + e.what());
    }

    corpus.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::filesystem::path p = dir / sample_file_name(i);
        corpus.samples.push_back(decode_sample(read_file(p), p.string()));
    }
    return corpus;
}

std::string train_log_jsonl(const TrainLog& log) {
    std::string out;
    for (const EpochStats& e : log.epochs) {
        json line;
        line["epoch"] = e.epoch;
        line["l_ntp"] = e.mean_loss.l_ntp;
        line["l_sup"] = e.mean_loss.l_sup;
        line["l_attn"] = e.mean_loss.l_attn;
        line["lambda1"] = e.mean_loss.lambda1;
        line["lambda2"] = e.mean_loss.lambda2;
        line["total"] = e.mean_loss.total;
        line["eval_accuracy"] = e.eval_accuracy;
        line["eval_suppression_mass"] = e.eval_suppression_mass;
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

json eval_report_json(const EvalReport& report) {
    json j;
    j["overall"] = report.overall;
    j["sample_count"] = report.sample_count;
    j["decode_mode"] = decode_mode_name(report.mode);
    j["gamma"] = report.gamma;
    json per_class = json::object();
    for (const auto& [cls, acc] : report.per_size_class) {
        per_class[cls] = {{"accuracy", acc}, {"count", report.size_class_counts.at(cls)}};
    }
    j["per_size_class"] = std::move(per_class);
    if (!report.per_category.empty()) {
        json per_cat = json::object();
        for (const auto& [cat, acc] : report.per_category) {
            per_cat[cat] = {{"accuracy", acc}, {"count", report.category_counts.at(cat)}};
        }
        j["per_category"] = std::move(per_cat);
    }
    return j;
}

namespace {

/// small/medium/large before anything else, then lexicographic.
std::vector<std::string> ordered_classes(const std::map<std::string, double>& m) {
    std::vector<std::string> keys;
    for (const char* k : {"small", "medium", "large"}) {
        if (m.count(k)) keys.push_back(k);
    }
    for (const auto& [k, v] : m) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    return keys;
}

} // namespace

std::string eval_report_table(const EvalReport& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "samples  " << report.sample_count << "\n";
    os << "overall  " << report.overall << "\n";
    os << "decode   " << decode_mode_name(report.mode);
    if (report.mode == DecodeMode::threshold_centroid) {
        os << " (gamma " << std::setprecision(2) << report.gamma << std::setprecision(4) << ")";
    }
    os << "\n";

    const auto section = [&](const char* header,
                             const std::map<std::string, double>& accs,
                             const std::map<std::string, std::size_t>& counts) {
        if (accs.empty()) return;
        std::size_t w = std::string(header).size();
        for (const auto& [k, v] : accs) w = std::max(w, k.size());
        os << "\n" << std::left << std::setw(static_cast<int>(w)) << header
           << "  accuracy  samples\n";
        for (const std::string& k : ordered_classes(accs)) {
            os << std::left << std::setw(static_cast<int>(w)) << k << "  " << std::right
               << std::setw(8) << accs.at(k) << "  " << std::setw(7) << counts.at(k) << "\n";
        }
    };
    section("class", report.per_size_class, report.size_class_counts);
    section("category", report.per_category, report.category_counts);
    return std::move(os).str();
}

json ablation_report_json(const AblationReport& report) {
    json j;
    j["seeds_per_cell"] = report.seeds_per_cell;
    json cells = json::array();
    for (const AblationCell& c : report.cells) {
        json cell;
        cell["name"] = c.name;
        cell["label_kind"] = c.label_kind == LabelKind::gaussian ? "gaussian" : "uniform";
        cell["suppression"] = c.suppression;
        if (c.label_kind == LabelKind::gaussian) cell["sigma_factor"] = c.sigma_factor;
        else cell["sigma_factor"] = nullptr;
        cell["seeds"] = c.seeds;
        cell["overall"] = c.overall;
        cell["final_suppression_mass"] = c.final_suppression_mass;
        cell["mean_overall"] = c.mean_overall;
        cell["stddev_overall"] = c.stddev_overall;
        json per_class = json::object();
        for (const auto& [cls, values] : c.per_size_class) per_class[cls] = values;
        cell["per_size_class"] = std::move(per_class);
        json mean_per_class = json::object();
        for (const auto& [cls, v] : c.mean_per_size_class) mean_per_class[cls] = v;
        cell["mean_per_size_class"] = std::move(mean_per_class);
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);
    return j;
}

std::string ablation_report_table(const AblationReport& report) {
    std::size_t name_w = 4;
    std::map<std::string, double> class_union;
    for (const AblationCell& c : report.cells) {
        name_w = std::max(name_w, c.name.size());
        for (const auto& [cls, v] : c.mean_per_size_class) class_union[cls] = v;
    }
    const std::vector<std::string> classes = ordered_classes(class_union);

    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(name_w)) << "cell" << "  " << std::right
       << std::setw(6) << "mean" << "  " << std::setw(6) << "spread";
    for (const std::string& cls : classes) {
        os << "  " << std::setw(6) << cls;
    }
    os << "\n";
    os << std::fixed << std::setprecision(4);
    for (const AblationCell& c : report.cells) {
        os << std::left << std::setw(static_cast<int>(name_w)) << c.name << "  " << std::right
           << std::setw(6) << c.mean_overall << "  " << std::setw(6) << c.stddev_overall;
        for (const std::string& cls : classes) {
            const auto it = c.mean_per_size_class.find(cls);
            if (it == c.mean_per_size_class.end()) {
                os << "  " << std::setw(6) << "-";
            } else {
                os << "  " << std::setw(6) << it->second;
            }
        }
        os << "\n";
    }
    return std::move(os).str();
}

StagedDir::StagedDir(std::filesystem::path target) : target_(std::move(target)) {
    if (target_.empty()) throw std::invalid_argument("empty output path");
    temp_ = sibling_temp(target_);
    std::filesystem::create_directories(temp_);
}

void StagedDir::commit() {
    if (committed_) return;
    std::error_code ec;
    std::filesystem::remove_all(target_, ec);
    std::filesystem::rename(temp_, target_);
    committed_ = true;
}

StagedDir::~StagedDir() {
    if (!committed_) {
        std::error_code ec;
        std::filesystem::remove_all(temp_, ec);
    }
}

} // namespace v2p
