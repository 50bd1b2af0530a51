#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = V2P_CLI_PATH;
const std::string kFixtures = V2P_FIXTURES_DIR;

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() /
              ("v2p_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(next()++));
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }
    static int& next() {
        static int c = 0;
        return c;
    }
};

struct RunResult {
    int exit_code = -1;
    std::string out;
};

void write_garbage(const Sandbox& sb) {
    std::ofstream f(sb.dir / "garbage.bin", std::ios::binary);
    f << "not a checkpoint";
}

RunResult run(const Sandbox& sb, const std::string& args, const std::string& env = "") {
    const fs::path out_file = sb.dir / "stdout.txt";
    const std::string cmd =
        env + " " + kCli + " " + args + " > " + out_file.string() + " 2> /dev/null";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return r;
}

} // namespace

TEST_CASE("help succeeds and bad invocations are usage errors") {
    Sandbox sb;
    CHECK(run(sb, "--help").exit_code == 0);
    CHECK(run(sb, "").exit_code == 1);
    CHECK(run(sb, "frobnicate").exit_code == 1);
    CHECK(run(sb, "filter").exit_code == 1);                 // missing --annotations
    CHECK(run(sb, "train --epochs 3").exit_code == 1);       // missing --corpus
}

TEST_CASE("filter splits the fixture and writes both shards") {
    Sandbox sb;
    const fs::path out = sb.dir / "filtered";
    RunResult r = run(sb, "filter --annotations " + kFixtures + "/annotations.jsonl --out " +
                              out.string());
    REQUIRE(r.exit_code == 0);
    json summary = json::parse(r.out);
    CHECK(summary["command"] == "filter");
    CHECK(summary["threshold"] == 0.3);
    CHECK(summary["total"] == 50);
    CHECK(summary["kept"] == 28);
    CHECK(summary["dropped"] == 22);
    CHECK(summary["no_parser_boxes"] == 3);
    CHECK(summary["issues"] == 7);

    std::ifstream kept(out / "kept.jsonl");
    std::string line;
    std::size_t kept_lines = 0;
    while (std::getline(kept, line)) ++kept_lines;
    CHECK(kept_lines == 28);
    CHECK(fs::exists(out / "dropped.jsonl"));

    // --pretty switches to a table
    RunResult pretty = run(sb, "filter --annotations " + kFixtures +
                                   "/annotations.jsonl --pretty --out " + out.string());
    CHECK(pretty.exit_code == 0);
    CHECK(pretty.out.find("kept") != std::string::npos);
    CHECK(json::accept(pretty.out) == false);
}

TEST_CASE("filter with a stricter threshold keeps fewer records") {
    Sandbox sb;
    const fs::path out = sb.dir / "strict";
    RunResult r = run(sb, "filter --threshold 0.5 --annotations " + kFixtures +
                              "/annotations.jsonl --out " + out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["kept"] == 18);

    // out-of-range threshold is a usage error and must not create the directory
    const fs::path bad = sb.dir / "bad";
    RunResult e = run(sb, "filter --threshold 1.5 --annotations " + kFixtures +
                              "/annotations.jsonl --out " + bad.string());
    CHECK(e.exit_code == 1);
    CHECK_FALSE(fs::exists(bad));
}

TEST_CASE("missing output location is a usage error; the env default fills it") {
    Sandbox sb;
    RunResult no_out =
        run(sb, "filter --annotations " + kFixtures + "/annotations.jsonl", "V2P_OUT_DIR=");
    CHECK(no_out.exit_code == 1);

    RunResult env_out = run(sb, "filter --annotations " + kFixtures + "/annotations.jsonl",
                            "V2P_OUT_DIR=" + (sb.dir / "envout").string());
    REQUIRE(env_out.exit_code == 0);
    CHECK(fs::exists(sb.dir / "envout" / "filtered" / "kept.jsonl"));
}

TEST_CASE("gen-labels renders one map per record plus a manifest") {
    Sandbox sb;
    // three records over a 64x64 image
    const fs::path ann = sb.dir / "mini.jsonl";
    {
        std::ofstream f(ann);
        f << R"({"image_id":"a","image_width":64,"image_height":64,"instruction":"x","gt_bbox":[8,8,24,24]})"
          << "\n";
        f << R"({"image_id":"b","image_width":64,"image_height":64,"instruction":"y","gt_bbox":[30,30,60,60]})"
          << "\n";
        f << "oops\n";
        f << R"({"image_id":"c","image_width":64,"image_height":64,"instruction":"z","gt_bbox":[14,14,18,18]})"
          << "\n";
    }
    const fs::path out = sb.dir / "labels";
    RunResult r = run(sb, "gen-labels --annotations " + ann.string() + " --patch-size 16 --out " +
                              out.string());
    REQUIRE(r.exit_code == 0);
    json summary = json::parse(r.out);
    CHECK(summary["records"] == 3);
    CHECK(summary["issues"] == 1);
    CHECK(fs::exists(out / "000000.bin"));
    CHECK(fs::exists(out / "000002.bin"));
    json manifest = json::parse(std::ifstream(out / "manifest.json"));
    CHECK(manifest["labels"].size() == 3);
    CHECK(manifest["kind"] == "gaussian");
    CHECK(manifest["issues"][0]["line"] == 3);

    // uniform maps on the same input, sliver box falls back to one patch
    const fs::path uout = sb.dir / "ulabels";
    RunResult u = run(sb, "gen-labels --kind uniform --annotations " + ann.string() +
                              " --patch-size 16 --out " + uout.string());
    REQUIRE(u.exit_code == 0);
    json umanifest = json::parse(std::ifstream(uout / "manifest.json"));
    CHECK(umanifest["labels"][2]["center_fallback"] == true);
}

TEST_CASE("heatmap renders grid files to ppm") {
    Sandbox sb;
    const fs::path out = sb.dir / "map.ppm";
    RunResult r = run(sb, "heatmap --grid " + kFixtures + "/heatmap_grid.csv --scale 1 --out " +
                              out.string());
    REQUIRE(r.exit_code == 0);
    json summary = json::parse(r.out);
    CHECK(summary["rows"] == 2);
    CHECK(summary["cols"] == 2);
    CHECK(summary["max_value"] == 1.0);
    std::ifstream ppm(out, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(ppm)), std::istreambuf_iterator<char>());
    std::ifstream gold(kFixtures + "/heatmap_golden.ppm", std::ios::binary);
    std::string expect((std::istreambuf_iterator<char>(gold)), std::istreambuf_iterator<char>());
    CHECK(bytes == expect);
}

TEST_CASE("synth, train, and eval chain end to end") {
    Sandbox sb;
    const std::string geometry =
        " --image-width 64 --image-height 64 --patch-size 8"
        " --small-range 10 18 --medium-range 18 28 --large-range 28 36";
    const fs::path corpus = sb.dir / "corpus";
    RunResult syn = run(sb, "synth --scenes 40 --seed 3" + geometry + " --out " + corpus.string());
    REQUIRE(syn.exit_code == 0);
    json syn_summary = json::parse(syn.out);
    CHECK(syn_summary["scenes"] == 40);
    CHECK(syn_summary["config"]["patch_size"] == 8);
    CHECK(fs::exists(corpus / "manifest.json"));
    CHECK(fs::exists(corpus / "000039.bin"));

    const fs::path runout = sb.dir / "run";
    RunResult trn = run(sb, "train --corpus " + corpus.string() +
                                " --epochs 2 --hidden-dim 16 --embed-dim 16 --out " +
                                runout.string());
    REQUIRE(trn.exit_code == 0);
    json trn_summary = json::parse(trn.out);
    CHECK(trn_summary["epochs_run"] == 2);
    CHECK(trn_summary["train_count"] == 32);
    CHECK(trn_summary["eval_count"] == 8);
    CHECK(trn_summary["config"]["label_kind"] == "gaussian");
    REQUIRE(fs::exists(runout / "checkpoint.bin"));
    REQUIRE(fs::exists(runout / "checkpoint.bin.json"));
    std::ifstream log(runout / "train_log.jsonl");
    std::string line;
    std::size_t log_lines = 0;
    while (std::getline(log, line)) {
        CHECK(json::accept(line));
        ++log_lines;
    }
    CHECK(log_lines == 2);

    const std::string ckpt = (runout / "checkpoint.bin").string();
    RunResult evl = run(sb, "eval --corpus " + corpus.string() + " --checkpoint " + ckpt);
    REQUIRE(evl.exit_code == 0);
    json report = json::parse(evl.out);
    CHECK(report["sample_count"] == 8);
    CHECK(report["decode_mode"] == "threshold");
    // the tail metric matches what training reported for its final epoch
    CHECK(report["overall"] == trn_summary["final_accuracy"]);

    // argmax and threshold at gamma 1.0 agree on these maps
    RunResult am = run(sb, "eval --mode argmax --corpus " + corpus.string() + " --checkpoint " + ckpt);
    RunResult th = run(sb, "eval --mode threshold --gamma 1.0 --corpus " + corpus.string() +
                               " --checkpoint " + ckpt);
    REQUIRE(am.exit_code == 0);
    REQUIRE(th.exit_code == 0);
    CHECK(json::parse(am.out)["overall"] == json::parse(th.out)["overall"]);

    // evaluating the whole corpus
    RunResult full = run(sb, "eval --eval-split 1.0 --corpus " + corpus.string() +
                                 " --checkpoint " + ckpt);
    REQUIRE(full.exit_code == 0);
    CHECK(json::parse(full.out)["sample_count"] == 40);

    // corrupt checkpoint data: a data error, exit 2
    write_garbage(sb);
    RunResult bad = run(sb, "eval --corpus " + corpus.string() + " --checkpoint " +
                                (sb.dir / "garbage.bin").string());
    CHECK(bad.exit_code == 2);
}

TEST_CASE("ablate emits the report pair and per-cell checkpoints") {
    Sandbox sb;
    const std::string geometry =
        " --image-width 64 --image-height 64 --patch-size 8"
        " --small-range 10 18 --medium-range 18 28 --large-range 28 36";
    const fs::path corpus = sb.dir / "corpus";
    REQUIRE(run(sb, "synth --scenes 30 --seed 4" + geometry + " --out " + corpus.string())
                .exit_code == 0);

    const fs::path out = sb.dir / "ablation";
    RunResult r = run(sb, "ablate --corpus " + corpus.string() +
                              " --epochs 1 --hidden-dim 16 --embed-dim 16 --seeds 1"
                              " --sigma-factors 1.0 --out " +
                              out.string());
    REQUIRE(r.exit_code == 0);
    json report = json::parse(r.out);
    REQUIRE(report["cells"].size() == 3);
    CHECK(report["seeds_per_cell"] == 1);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "report.txt"));
    std::size_t data_files = 0, sidecars = 0;
    for (const auto& entry : fs::directory_iterator(out / "checkpoints")) {
        if (entry.path().extension() == ".bin") ++data_files;
        if (entry.path().extension() == ".json") ++sidecars;
    }
    CHECK(data_files == 3);
    CHECK(sidecars == 3);
}
