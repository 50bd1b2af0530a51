#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "v2p/error.hpp"
#include "v2p/io.hpp"
#include "v2p/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

using namespace v2p;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = V2P_FIXTURES_DIR;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("v2p_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

GridValues random_grid(Rng& rng, std::uint32_t rows, std::uint32_t cols) {
    GridValues g;
    g.rows = rows;
    g.cols = cols;
    g.values.resize(static_cast<std::size_t>(rows) * cols);
    for (double& v : g.values) v = rng.uniform(-3, 3);
    return g;
}

} // namespace

TEST_CASE("binary grids round-trip exactly") {
    Rng rng(1);
    GridValues g = random_grid(rng, 5, 7);
    GridValues back = decode_grid_binary(encode_grid_binary(g));
    CHECK(back.rows == 5);
    CHECK(back.cols == 7);
    CHECK(back.values == g.values);
}

TEST_CASE("binary grid decoding validates its input") {
    Rng rng(2);
    std::string bytes = encode_grid_binary(random_grid(rng, 3, 3));
    CHECK_THROWS_AS(decode_grid_binary(bytes.substr(0, bytes.size() - 5)), DataError);
    CHECK_THROWS_AS(decode_grid_binary(bytes + "xx"), DataError);
    CHECK_THROWS_AS(decode_grid_binary("abc"), DataError);
}

TEST_CASE("csv grids round-trip at full precision") {
    Rng rng(3);
    GridValues g = random_grid(rng, 4, 2);
    g.values[0] = 1.0 / 3.0;
    g.values[1] = 1e-17;
    GridValues back = decode_grid_csv(encode_grid_csv(g));
    CHECK(back.rows == 4);
    CHECK(back.cols == 2);
    CHECK(back.values == g.values);

    CHECK_THROWS_AS(decode_grid_csv("1,2\n3\n"), DataError);
    CHECK_THROWS_AS(decode_grid_csv("1,abc\n"), DataError);
}

TEST_CASE("read_grid picks the format from the extension") {
    TempDir tmp;
    Rng rng(4);
    GridValues g = random_grid(rng, 3, 4);
    write_file(tmp.path / "grid.bin", encode_grid_binary(g));
    write_file(tmp.path / "grid.csv", encode_grid_csv(g));
    CHECK(read_grid(tmp.path / "grid.bin").values == g.values);
    CHECK(read_grid(tmp.path / "grid.csv").values == g.values);
}

TEST_CASE("label and attention maps convert to bare grids") {
    PatchGrid grid(32, 32, 16);
    LabelMap m;
    m.grid = grid;
    m.values = {0.1, 0.2, 0.3, 0.4};
    GridValues g = to_grid_values(m);
    CHECK(g.rows == 2);
    CHECK(g.cols == 2);
    CHECK(g.values == m.values);

    AttentionMap a;
    a.grid = grid;
    a.probs = {0.25, 0.25, 0.25, 0.25};
    CHECK(to_grid_values(a).values == a.probs);
}

TEST_CASE("heatmap bytes match the golden fixture") {
    GridValues g = decode_grid_csv(read_file(kFixtures + "/heatmap_grid.csv"));
    const std::string golden = read_file(kFixtures + "/heatmap_golden.ppm");
    CHECK(heatmap_ppm(g, 1) == golden);

    // scaling the cells scales only the raster dimensions
    const std::string big = heatmap_ppm(g, 3);
    CHECK(big.substr(0, 11) == "P6\n6 6\n255\n");
    CHECK(big.size() == 11 + 6 * 6 * 3);
}

TEST_CASE("heatmap handles flat grids and rejects bad shapes") {
    GridValues zero;
    zero.rows = 1;
    zero.cols = 2;
    zero.values = {0.0, 0.0};
    const std::string ppm = heatmap_ppm(zero, 1);
    // all-zero map renders fully blue
    const std::string pixels = ppm.substr(ppm.size() - 6);
    CHECK(pixels == std::string("\x00\x00\xff\x00\x00\xff", 6));

    GridValues bad;
    CHECK_THROWS_AS(heatmap_ppm(bad, 1), std::invalid_argument);
    CHECK_THROWS_AS(heatmap_ppm(zero, 0), std::invalid_argument);
    zero.values.pop_back();
    CHECK_THROWS_AS(heatmap_ppm(zero, 1), std::invalid_argument);
}

TEST_CASE("file helpers write atomically and report failures") {
    TempDir tmp;
    const fs::path p = tmp.path / "file.txt";
    write_file(p, "first");
    CHECK(read_file(p) == "first");
    write_file(p, "second"); // overwrite through rename
    CHECK(read_file(p) == "second");
    CHECK_THROWS_AS(read_file(tmp.path / "missing.txt"), DataError);
}

TEST_CASE("checkpoints round-trip parameters and config") {
    TempDir tmp;
    HeadConfig cfg;
    cfg.feature_dim = 6;
    cfg.query_dim = 5;
    cfg.hidden_dim = 4;
    cfg.embed_dim = 3;
    cfg.seed = 123;
    HeadParameters p = init_head(cfg);
    const fs::path path = tmp.path / "checkpoint.bin";
    save_checkpoint(path, p, json{{"note", "unit"}});

    HeadParameters q = load_checkpoint(path);
    CHECK(q.config.feature_dim == 6);
    CHECK(q.config.query_dim == 5);
    CHECK(q.config.hidden_dim == 4);
    CHECK(q.config.embed_dim == 3);
    CHECK(q.config.seed == 123);
    CHECK(q.flatten() == p.flatten());

    // sidecar is readable json carrying the hyperparameters
    json side = json::parse(read_file(path.string() + ".json"));
    CHECK(side["hyperparameters"]["note"] == "unit");

    // truncated data file no longer matches the sidecar shape
    std::string data = read_file(path);
    write_file(path, data.substr(0, data.size() - 8));
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
    CHECK_THROWS_AS(load_checkpoint(tmp.path / "nope.bin"), DataError);
}

TEST_CASE("corpora round-trip through their directory format") {
    TempDir tmp;
    SynthConfig cfg;
    cfg.seed = 77;
    Corpus corpus = generate_corpus(cfg, 12);
    const fs::path dir = tmp.path / "corpus";
    save_corpus(dir, corpus);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "000000.bin"));
    CHECK(fs::exists(dir / "000011.bin"));

    Corpus back = load_corpus(dir);
    CHECK(back.config.seed == 77);
    CHECK(back.config.image_width == cfg.image_width);
    REQUIRE(back.samples.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(back.samples[i].feats.data == corpus.samples[i].feats.data);
        CHECK(back.samples[i].query == corpus.samples[i].query);
        CHECK(back.samples[i].target.x1 == corpus.samples[i].target.x1);
        CHECK(back.samples[i].target.y2 == corpus.samples[i].target.y2);
        CHECK(back.samples[i].size_class == corpus.samples[i].size_class);
        CHECK(back.samples[i].distractors.size() == corpus.samples[i].distractors.size());
    }

    CHECK_THROWS_AS(load_corpus(tmp.path / "absent"), DataError);
    // trailing bytes in a record are rejected
    write_file(dir / "000000.bin", read_file(dir / "000000.bin") + "zz");
    CHECK_THROWS_AS(load_corpus(dir), DataError);
}

TEST_CASE("train logs serialize one epoch per line without wall times") {
    TrainLog log;
    log.initial_accuracy = 0.25;
    log.train_count = 80;
    log.eval_count = 20;
    log.wall_seconds = 12.5;
    EpochStats e1;
    e1.epoch = 1;
    e1.mean_loss.total = 2.0;
    e1.mean_loss.l_sup = 0.5;
    e1.mean_loss.l_attn = 1.5;
    e1.eval_accuracy = 0.5;
    e1.eval_suppression_mass = 0.4;
    EpochStats e2 = e1;
    e2.epoch = 2;
    e2.eval_accuracy = 0.75;
    log.epochs = {e1, e2};

    const std::string text = train_log_jsonl(log);
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    REQUIRE(lines.size() == 2);
    json first = json::parse(lines[0]);
    CHECK(first["epoch"] == 1);
    CHECK(first["l_sup"] == 0.5);
    CHECK(first["eval_accuracy"] == 0.5);
    CHECK_FALSE(first.contains("wall_seconds"));
    CHECK(json::parse(lines[1])["epoch"] == 2);
}

TEST_CASE("eval reports serialize to json and tables") {
    EvalReport r;
    r.overall = 0.875;
    r.sample_count = 40;
    r.per_size_class = {{"small", 0.75}, {"large", 1.0}};
    r.size_class_counts = {{"small", 20}, {"large", 20}};
    r.mode = DecodeMode::threshold_centroid;
    r.gamma = 0.8;
    json j = eval_report_json(r);
    CHECK(j["overall"] == 0.875);
    CHECK(j["sample_count"] == 40);
    CHECK(j["decode_mode"] == "threshold");
    CHECK(j["per_size_class"]["small"]["accuracy"] == 0.75);

    const std::string table = eval_report_table(r);
    CHECK(table.find("overall") != std::string::npos);
    CHECK(table.find("small") != std::string::npos);
}

TEST_CASE("staged directories appear only on commit") {
    TempDir tmp;
    const fs::path target = tmp.path / "out";
    {
        StagedDir staged(target);
        write_file(staged.path() / "a.txt", "data");
        CHECK_FALSE(fs::exists(target));
        // no commit: destructor discards
    }
    CHECK_FALSE(fs::exists(target));

    {
        StagedDir staged(target);
        write_file(staged.path() / "a.txt", "data");
        staged.commit();
    }
    CHECK(fs::exists(target / "a.txt"));
    CHECK(read_file(target / "a.txt") == "data");

    // committing over an existing directory replaces it
    {
        StagedDir staged(target);
        write_file(staged.path() / "b.txt", "new");
        staged.commit();
    }
    CHECK(fs::exists(target / "b.txt"));
    CHECK_FALSE(fs::exists(target / "a.txt"));
}
