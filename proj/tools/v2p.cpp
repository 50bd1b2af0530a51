// Command-line front end for the grounding pipeline. Every subcommand prints
// a JSON summary on stdout (or a table with --pretty) and stages output
// directories so a failed run never leaves partial artifacts. Timing goes to
// stderr only, keeping artifacts byte-reproducible.

#include "v2p/error.hpp"
#include "v2p/eval.hpp"
#include "v2p/ingest.hpp"
#include "v2p/io.hpp"
#include "v2p/labels.hpp"
#include "v2p/synth.hpp"
#include "v2p/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace v2p;

namespace {

class WallTimer {
public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

/// --out when given, else $V2P_OUT_DIR/<leaf>; empty when neither is set.
fs::path resolve_out_dir(const std::string& flag, const char* leaf) {
    if (!flag.empty()) return fs::path(flag);
    if (const char* env = std::getenv("V2P_OUT_DIR"); env && *env) {
        return fs::path(env) / leaf;
    }
    return {};
}

fs::path require_out_dir(const std::string& flag, const char* leaf) {
    fs::path out = resolve_out_dir(flag, leaf);
    if (out.empty()) {
        throw std::invalid_argument(
            "no output location: pass --out or set V2P_OUT_DIR");
    }
    return out;
}

void emit(const json& summary, bool pretty, const std::string& table) {
    if (pretty) {
        std::cout << table;
    } else {
        std::cout << summary.dump(2) << "\n";
    }
}

LabelKind parse_kind(const std::string& s) {
    if (s == "gaussian") return LabelKind::gaussian;
    if (s == "uniform") return LabelKind::uniform;
    throw std::invalid_argument("unknown label kind: " + s);
}

std::uint32_t checked_dim(double v, const char* what) {
    if (!(v > 0.0) || v != std::floor(v) || v > 65536.0) {
        throw std::invalid_argument(std::string(what) + " must be a positive integer pixel count");
    }
    return static_cast<std::uint32_t>(v);
}

std::string slug(const std::string& name) {
    std::string s;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') {
            s += c;
        } else {
            s += '_';
        }
    }
    return s;
}

json synth_config_json(const SynthConfig& c) {
    return json{{"image_width", c.image_width},
                {"image_height", c.image_height},
                {"patch_size", c.patch_size},
                {"elements_per_scene", c.elements_per_scene},
                {"small_range", {c.small_range.min_side, c.small_range.max_side}},
                {"medium_range", {c.medium_range.min_side, c.medium_range.max_side}},
                {"large_range", {c.large_range.min_side, c.large_range.max_side}},
                {"feature_dim", c.feature_dim},
                {"query_dim", c.query_dim},
                {"sigma_noise", c.sigma_noise},
                {"seed", c.seed}};
}

json train_config_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"lambda1", c.lambda1},
                {"lambda2", c.lambda2},
                {"sigma_factor", c.sigma_factor},
                {"epsilon", c.epsilon},
                {"label_kind", c.label_kind == LabelKind::gaussian ? "gaussian" : "uniform"},
                {"suppression", c.suppression},
                {"seed", c.seed},
                {"eval_split", c.eval_split},
                {"hidden_dim", c.hidden_dim},
                {"embed_dim", c.embed_dim},
                {"decode_mode", decode_mode_name(c.decode_mode)},
                {"decode_gamma", c.decode_gamma},
                {"target_accuracy", c.target_accuracy}};
}

// ---------------------------------------------------------------- gen-labels

struct GenLabelsArgs {
    std::string annotations;
    std::uint32_t patch_size = 16;
    double sigma_factor = 1.0;
    double epsilon = 1e-6;
    std::string kind = "gaussian";
    std::string out;
    bool pretty = false;
};

int run_gen_labels(const GenLabelsArgs& a) {
    const LabelKind kind = parse_kind(a.kind);
    const fs::path out = require_out_dir(a.out, "labels");
    ParseResult parsed = parse_annotations(a.annotations);

    StagedDir staged(out);
    json entries = json::array();
    for (std::size_t r = 0; r < parsed.records.size(); ++r) {
        const AnnotationRecord& rec = parsed.records[r];
        PatchGrid grid(checked_dim(rec.image_width, "image_width"),
                       checked_dim(rec.image_height, "image_height"), a.patch_size);
        bool fallback = false;
        LabelMap map = kind == LabelKind::gaussian
                           ? gaussian_label_map(grid, rec.gt_bbox, a.sigma_factor, a.epsilon)
                           : uniform_label_map(grid, rec.gt_bbox, &fallback);
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu.bin", r);
        write_file(staged.path() / name, encode_grid_binary(to_grid_values(map)));
        json entry{{"file", name},
                   {"image_id", rec.image_id},
                   {"rows", map.grid.rows},
                   {"cols", map.grid.cols},
                   {"peak_index", map.peak_index()}};
        if (kind == LabelKind::uniform && fallback) entry["center_fallback"] = true;
        entries.push_back(std::move(entry));
    }
    json issues = json::array();
    for (const ParseIssue& i : parsed.issues) {
        issues.push_back({{"line", i.line}, {"message", i.message}});
    }
    json manifest{{"kind", a.kind},
                  {"patch_size", a.patch_size},
                  {"sigma_factor", a.sigma_factor},
                  {"epsilon", a.epsilon},
                  {"count", parsed.records.size()},
                  {"labels", entries},
                  {"issues", issues}};
    write_file(staged.path() / "manifest.json", manifest.dump(2) + "\n");
    staged.commit();

    json summary{{"command", "gen-labels"},
                 {"records", parsed.records.size()},
                 {"issues", parsed.issues.size()},
                 {"kind", a.kind},
                 {"patch_size", a.patch_size},
                 {"sigma_factor", a.sigma_factor},
                 {"out", out.string()}};
    std::string table = "gen-labels: " + std::to_string(parsed.records.size()) + " label maps (" +
                        a.kind + ", patch " + std::to_string(a.patch_size) + ") -> " +
                        out.string() + "\n";
    if (!parsed.issues.empty()) {
        table += "skipped " + std::to_string(parsed.issues.size()) + " malformed lines\n";
    }
    emit(summary, a.pretty, table);
    return 0;
}

// -------------------------------------------------------------------- filter

struct FilterArgs {
    std::string annotations;
    double threshold = 0.3;
    std::string out;
    bool pretty = false;
};

int run_filter(const FilterArgs& a) {
    const fs::path out = require_out_dir(a.out, "filtered");
    ParseResult parsed = parse_annotations(a.annotations);
    FilterResult filtered = iou_filter(parsed.records, a.threshold);

    StagedDir staged(out);
    std::string kept_text, dropped_text;
    for (const AnnotationRecord& r : filtered.kept) kept_text += annotation_to_json_line(r) + "\n";
    for (const AnnotationRecord& r : filtered.dropped) {
        dropped_text += annotation_to_json_line(r) + "\n";
    }
    write_file(staged.path() / "kept.jsonl", kept_text);
    write_file(staged.path() / "dropped.jsonl", dropped_text);
    staged.commit();

    json summary{{"command", "filter"},
                 {"threshold", a.threshold},
                 {"total", parsed.records.size()},
                 {"kept", filtered.kept.size()},
                 {"dropped", filtered.dropped.size()},
                 {"no_parser_boxes", filtered.no_parser_count},
                 {"issues", parsed.issues.size()},
                 {"out", out.string()}};
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "filter @ %.2f: %zu kept, %zu dropped (%zu without parser boxes) -> %s\n",
                  a.threshold, filtered.kept.size(), filtered.dropped.size(),
                  filtered.no_parser_count, out.string().c_str());
    emit(summary, a.pretty, buf);
    return 0;
}

// --------------------------------------------------------------------- synth

struct SynthArgs {
    std::uint64_t scenes = 2000;
    SynthConfig config;
    std::string out;
    bool serial = false;
    bool pretty = false;
};

int run_synth(const SynthArgs& a) {
    const fs::path out = require_out_dir(a.out, "corpus");
    WallTimer timer;
    Corpus corpus =
        a.serial ? generate_corpus_serial(a.config, a.scenes) : generate_corpus(a.config, a.scenes);

    StagedDir staged(out);
    save_corpus(staged.path(), corpus);
    staged.commit();
    std::fprintf(stderr, "synth: %llu scenes in %.2fs\n",
                 static_cast<unsigned long long>(a.scenes), timer.seconds());

    std::size_t counts[3] = {0, 0, 0};
    for (const GroundingSample& s : corpus.samples) {
        counts[static_cast<std::uint32_t>(s.size_class)]++;
    }
    json summary{{"command", "synth"},
                 {"scenes", a.scenes},
                 {"out", out.string()},
                 {"config", synth_config_json(a.config)},
                 {"class_counts",
                  {{"small", counts[0]}, {"medium", counts[1]}, {"large", counts[2]}}}};
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "synth: %llu scenes (small %zu / medium %zu / large %zu) -> %s\n",
                  static_cast<unsigned long long>(a.scenes), counts[0], counts[1], counts[2],
                  out.string().c_str());
    emit(summary, a.pretty, buf);
    return 0;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
    std::string corpus;
    TrainConfig config;
    std::string kind = "gaussian";
    std::string mode = "threshold";
    bool no_suppression = false;
    bool serial = false;
    std::string out;
    bool pretty = false;
};

TrainConfig finish_train_config(TrainArgs& a) {
    a.config.label_kind = parse_kind(a.kind);
    a.config.decode_mode = parse_decode_mode(a.mode);
    a.config.suppression = !a.no_suppression;
    a.config.parallel = !a.serial;
    a.config.validate();
    return a.config;
}

int run_train(TrainArgs& a) {
    const TrainConfig config = finish_train_config(a);
    const fs::path out = require_out_dir(a.out, "run");
    Corpus corpus = load_corpus(a.corpus);

    TrainResult result = train(config, corpus);
    std::fprintf(stderr, "train: %zu epochs in %.2fs\n", result.log.epochs.size(),
                 result.log.wall_seconds);

    StagedDir staged(out);
    save_checkpoint(staged.path() / "checkpoint.bin", result.params,
                    json{{"train_config", train_config_json(config)}});
    write_file(staged.path() / "train_log.jsonl", train_log_jsonl(result.log));
    staged.commit();
    result.log.checkpoint = (out / "checkpoint.bin").string();

    const EpochStats* last = result.log.epochs.empty() ? nullptr : &result.log.epochs.back();
    json summary{{"command", "train"},
                 {"epochs_run", result.log.epochs.size()},
                 {"train_count", result.log.train_count},
                 {"eval_count", result.log.eval_count},
                 {"initial_accuracy", result.log.initial_accuracy},
                 {"initial_suppression_mass", result.log.initial_suppression_mass},
                 {"final_accuracy", last ? last->eval_accuracy : result.log.initial_accuracy},
                 {"final_suppression_mass",
                  last ? last->eval_suppression_mass : result.log.initial_suppression_mass},
                 {"final_loss", last ? last->mean_loss.total : 0.0},
                 {"checkpoint", result.log.checkpoint},
                 {"config", train_config_json(config)}};

    std::string table = "epoch  loss      sup       attn      accuracy  sup-mass\n";
    for (const EpochStats& e : result.log.epochs) {
        char line[128];
        std::snprintf(line, sizeof(line), "%5zu  %-8.5f  %-8.5f  %-8.5f  %-8.4f  %-8.4f\n",
                      e.epoch, e.mean_loss.total, e.mean_loss.l_sup, e.mean_loss.l_attn,
                      e.eval_accuracy, e.eval_suppression_mass);
        table += line;
    }
    emit(summary, a.pretty, table);
    return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
    std::string corpus;
    std::string checkpoint;
    std::string mode = "threshold";
    double gamma = 0.8;
    double eval_split = 0.2;
    bool serial = false;
    std::string out;
    bool pretty = false;
};

int run_eval(const EvalArgs& a) {
    if (!(a.eval_split > 0.0 && a.eval_split <= 1.0)) {
        throw std::invalid_argument("--eval-split must be in (0,1]");
    }
    const DecodeMode mode = parse_decode_mode(a.mode);
    Corpus corpus = load_corpus(a.corpus);
    HeadParameters params = load_checkpoint(a.checkpoint);

    const std::size_t n = corpus.samples.size();
    const std::size_t n_eval = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * a.eval_split));
    if (n_eval == 0) throw std::invalid_argument("eval split selects no samples");
    CorpusEval ce = evaluate_corpus(params, corpus, n - n_eval, mode, a.gamma, !a.serial);

    json report = eval_report_json(ce.report);
    report["command"] = "eval";
    report["checkpoint"] = fs::path(a.checkpoint).filename().string();
    if (fs::path out = resolve_out_dir(a.out, "eval"); !out.empty()) {
        StagedDir staged(out);
        write_file(staged.path() / "report.json", report.dump(2) + "\n");
        write_file(staged.path() / "report.txt", eval_report_table(ce.report));
        staged.commit();
        report["out"] = out.string();
    }
    emit(report, a.pretty, eval_report_table(ce.report));
    return 0;
}

// -------------------------------------------------------------------- ablate

struct AblateArgs {
    std::string corpus;
    TrainArgs train; // shared hyperparameter flags
    std::size_t seeds = 5;
    std::vector<double> sigma_factors{0.5, 1.0, 6.0};
    std::string out;
    bool pretty = false;
};

int run_ablate(AblateArgs& a) {
    const TrainConfig base = finish_train_config(a.train);
    const fs::path out = require_out_dir(a.out, "ablation");
    Corpus corpus = load_corpus(a.corpus);

    WallTimer timer;
    AblationReport report = run_ablation_matrix(base, corpus, a.seeds, a.sigma_factors);
    std::fprintf(stderr, "ablate: %zu cells x %zu seeds in %.2fs\n", report.cells.size(),
                 report.seeds_per_cell, timer.seconds());

    StagedDir staged(out);
    json report_json = ablation_report_json(report);
    write_file(staged.path() / "report.json", report_json.dump(2) + "\n");
    write_file(staged.path() / "report.txt", ablation_report_table(report));
    fs::create_directories(staged.path() / "checkpoints");
    for (const AblationCell& cell : report.cells) {
        for (std::size_t j = 0; j < cell.params.size(); ++j) {
            const std::string name =
                slug(cell.name) + "_seed" + std::to_string(cell.seeds[j]) + ".bin";
            save_checkpoint(staged.path() / "checkpoints" / name, cell.params[j],
                            json{{"cell", cell.name}, {"seed", cell.seeds[j]}});
        }
    }
    staged.commit();

    report_json["command"] = "ablate";
    report_json["out"] = out.string();
    emit(report_json, a.pretty, ablation_report_table(report));
    return 0;
}

// ------------------------------------------------------------------- heatmap

struct HeatmapArgs {
    std::string grid_file;
    std::uint32_t cell_pixels = 16;
    std::string out;
    bool pretty = false;
};

int run_heatmap(const HeatmapArgs& a) {
    fs::path out;
    if (!a.out.empty()) {
        out = a.out;
    } else if (const char* env = std::getenv("V2P_OUT_DIR"); env && *env) {
        out = fs::path(env) / "heatmap.ppm";
    } else {
        throw std::invalid_argument("no output location: pass --out or set V2P_OUT_DIR");
    }
    GridValues grid = read_grid(a.grid_file);
    write_file(out, heatmap_ppm(grid, a.cell_pixels));

    double max_value = 0.0;
    for (double v : grid.values) max_value = std::max(max_value, v);
    json summary{{"command", "heatmap"},
                 {"rows", grid.rows},
                 {"cols", grid.cols},
                 {"cell_pixels", a.cell_pixels},
                 {"max_value", max_value},
                 {"out", out.string()}};
    char buf[160];
    std::snprintf(buf, sizeof(buf), "heatmap: %ux%u grid -> %s (%upx cells)\n", grid.cols,
                  grid.rows, out.string().c_str(), a.cell_pixels);
    emit(summary, a.pretty, buf);
    return 0;
}

void add_train_flags(CLI::App* cmd, TrainArgs& t) {
    cmd->add_option("--epochs", t.config.epochs, "Training epochs");
    cmd->add_option("--learning-rate", t.config.learning_rate, "Fixed SGD step size");
    cmd->add_option("--batch-size", t.config.batch_size, "Minibatch size");
    cmd->add_option("--lambda1", t.config.lambda1, "Suppression loss weight");
    cmd->add_option("--lambda2", t.config.lambda2, "Attention alignment loss weight");
    cmd->add_option("--sigma-factor", t.config.sigma_factor, "Gaussian label width factor");
    cmd->add_option("--epsilon", t.config.epsilon, "Label normalization epsilon");
    cmd->add_option("--kind", t.kind, "Label kind: gaussian | uniform")
        ->check(CLI::IsMember({"gaussian", "uniform"}));
    cmd->add_flag("--no-suppression", t.no_suppression, "Drop the suppression term");
    cmd->add_option("--seed", t.config.seed, "Training seed");
    cmd->add_option("--eval-split", t.config.eval_split, "Held-out tail fraction");
    cmd->add_option("--hidden-dim", t.config.hidden_dim, "MLP hidden width");
    cmd->add_option("--embed-dim", t.config.embed_dim, "Scoring embedding width");
    cmd->add_option("--mode", t.mode, "Decode mode: argmax | threshold")
        ->check(CLI::IsMember({"argmax", "threshold"}));
    cmd->add_option("--gamma", t.config.decode_gamma, "Threshold decode cutoff fraction");
    cmd->add_option("--target-accuracy", t.config.target_accuracy,
                    "Stop early at this held-out accuracy (0 = off)");
    cmd->add_flag("--serial", t.serial, "Use the serial reference kernels");
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Attention-supervised GUI grounding toolkit"};
    app.require_subcommand(1);

    GenLabelsArgs gen;
    CLI::App* c_gen = app.add_subcommand("gen-labels", "Build supervision maps from annotations");
    c_gen->add_option("--annotations", gen.annotations, "JSONL annotation file")
        ->required()
        ->check(CLI::ExistingFile);
    c_gen->add_option("--patch-size", gen.patch_size, "Patch side in pixels");
    c_gen->add_option("--sigma-factor", gen.sigma_factor, "Gaussian width factor");
    c_gen->add_option("--epsilon", gen.epsilon, "Normalization epsilon");
    c_gen->add_option("--kind", gen.kind, "gaussian | uniform")
        ->check(CLI::IsMember({"gaussian", "uniform"}));
    c_gen->add_option("--out", gen.out, "Output directory");
    c_gen->add_flag("--pretty", gen.pretty, "Human-readable output");

    FilterArgs flt;
    CLI::App* c_flt = app.add_subcommand("filter", "Split annotations by parser-box overlap");
    c_flt->add_option("--annotations", flt.annotations, "JSONL annotation file")
        ->required()
        ->check(CLI::ExistingFile);
    c_flt->add_option("--threshold", flt.threshold, "Minimum best overlap to keep");
    c_flt->add_option("--out", flt.out, "Output directory");
    c_flt->add_flag("--pretty", flt.pretty, "Human-readable output");

    SynthArgs syn;
    CLI::App* c_syn = app.add_subcommand("synth", "Generate a synthetic grounding corpus");
    c_syn->add_option("--scenes", syn.scenes, "Number of scenes");
    c_syn->add_option("--seed", syn.config.seed, "Corpus seed");
    c_syn->add_option("--image-width", syn.config.image_width, "Scene width in pixels");
    c_syn->add_option("--image-height", syn.config.image_height, "Scene height in pixels");
    c_syn->add_option("--patch-size", syn.config.patch_size, "Patch side in pixels");
    c_syn->add_option("--elements", syn.config.elements_per_scene, "Elements per scene");
    c_syn->add_option("--feature-dim", syn.config.feature_dim, "Patch feature dimension");
    c_syn->add_option("--query-dim", syn.config.query_dim, "Query embedding dimension");
    c_syn->add_option("--sigma-noise", syn.config.sigma_noise, "Feature noise level");
    c_syn->add_option("--small-range", [&syn](const std::vector<std::string>& v) {
        syn.config.small_range = {std::stod(v.at(0)), std::stod(v.at(1))};
        return true;
    }, "Small element side range (min max)")->expected(2);
    c_syn->add_option("--medium-range", [&syn](const std::vector<std::string>& v) {
        syn.config.medium_range = {std::stod(v.at(0)), std::stod(v.at(1))};
        return true;
    }, "Medium element side range (min max)")->expected(2);
    c_syn->add_option("--large-range", [&syn](const std::vector<std::string>& v) {
        syn.config.large_range = {std::stod(v.at(0)), std::stod(v.at(1))};
        return true;
    }, "Large element side range (min max)")->expected(2);
    c_syn->add_flag("--serial", syn.serial, "Use the serial reference generator");
    c_syn->add_option("--out", syn.out, "Output directory");
    c_syn->add_flag("--pretty", syn.pretty, "Human-readable output");

    TrainArgs trn;
    CLI::App* c_trn = app.add_subcommand("train", "Train the grounding head on a corpus");
    c_trn->add_option("--corpus", trn.corpus, "Corpus directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    add_train_flags(c_trn, trn);
    c_trn->add_option("--out", trn.out, "Output directory");
    c_trn->add_flag("--pretty", trn.pretty, "Human-readable output");

    EvalArgs evl;
    CLI::App* c_evl = app.add_subcommand("eval", "Score a checkpoint on a corpus split");
    c_evl->add_option("--corpus", evl.corpus, "Corpus directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_evl->add_option("--checkpoint", evl.checkpoint, "Checkpoint data file")
        ->required()
        ->check(CLI::ExistingFile);
    c_evl->add_option("--mode", evl.mode, "Decode mode: argmax | threshold")
        ->check(CLI::IsMember({"argmax", "threshold"}));
    c_evl->add_option("--gamma", evl.gamma, "Threshold decode cutoff fraction");
    c_evl->add_option("--eval-split", evl.eval_split, "Tail fraction to score (1.0 = everything)");
    c_evl->add_flag("--serial", evl.serial, "Use the serial reference kernels");
    c_evl->add_option("--out", evl.out, "Optional report directory");
    c_evl->add_flag("--pretty", evl.pretty, "Human-readable output");

    AblateArgs abl;
    CLI::App* c_abl = app.add_subcommand("ablate", "Run the label/suppression ablation matrix");
    c_abl->add_option("--corpus", abl.corpus, "Corpus directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    add_train_flags(c_abl, abl.train);
    c_abl->add_option("--seeds", abl.seeds, "Seeds per cell");
    c_abl->add_option("--sigma-factors", abl.sigma_factors, "Gaussian width factors to sweep")
        ->delimiter(',');
    c_abl->add_option("--out", abl.out, "Output directory");
    c_abl->add_flag("--pretty", abl.pretty, "Human-readable output");

    HeatmapArgs hmp;
    CLI::App* c_hmp = app.add_subcommand("heatmap", "Render a grid file as a PPM image");
    c_hmp->add_option("--grid", hmp.grid_file, "Grid file (.bin or .csv)")
        ->required()
        ->check(CLI::ExistingFile);
    c_hmp->add_option("--scale", hmp.cell_pixels, "Square pixels per grid cell");
    c_hmp->add_option("--out", hmp.out, "Output image path");
    c_hmp->add_flag("--pretty", hmp.pretty, "Human-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (c_gen->parsed()) return run_gen_labels(gen);
    if (c_flt->parsed()) return run_filter(flt);
    if (c_syn->parsed()) return run_synth(syn);
    if (c_trn->parsed()) return run_train(trn);
    if (c_evl->parsed()) return run_eval(evl);
    if (c_abl->parsed()) return run_ablate(abl);
    if (c_hmp->parsed()) return run_heatmap(hmp);
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
