#pragma once

#include "v2p/head.hpp"
#include "v2p/labels.hpp"
#include "v2p/synth.hpp"
#include "v2p/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace v2p {

/// A bare rows x cols grid of doubles, the common shape of label maps and
/// attention maps once detached from their image geometry.
struct GridValues {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<double> values; // row-major
};

GridValues to_grid_values(const LabelMap& m);
GridValues to_grid_values(const AttentionMap& m);

/// Reads a whole file; throws DataError when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file, then renames over the target, so a
/// failed write never leaves a partial file behind.
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Raw grid format: u32 rows, u32 cols, then rows*cols doubles, row-major,
/// everything little-endian.
std::string encode_grid_binary(const GridValues& g);
GridValues decode_grid_binary(std::string_view bytes);

/// CSV alternative: one row per line, values separated by commas, full
/// round-trip precision.
std::string encode_grid_csv(const GridValues& g);
GridValues decode_grid_csv(std::string_view text);

/// Reads either grid format, chosen by extension (".csv" -> CSV, else raw).
GridValues read_grid(const std::filesystem::path& path);

/// Blue-to-red linear colormap over [0, max value], one cell_pixels-square
/// block per grid cell, binary portable pixel map (P6).
std::string heatmap_ppm(const GridValues& g, std::uint32_t cell_pixels = 16);

/// Parameters as a flat little-endian double file at `data_path` plus a JSON
/// sidecar at `data_path + ".json"` recording the shapes, the seed, and any
/// caller-supplied hyperparameters.
void save_checkpoint(const std::filesystem::path& data_path, const HeadParameters& params,
                     const nlohmann::json& hyperparameters = nlohmann::json::object());
HeadParameters load_checkpoint(const std::filesystem::path& data_path);

/// Corpus directory: manifest.json (config echo, seed, count) plus one
/// little-endian binary record per sample, named 000000.bin onward. Record
/// layout: u32 image_width, image_height, patch_size, feature_dim,
/// query_dim, size_class, distractor_count; then f64 target box (x1,y1,x2,y2),
/// distractor boxes, query vector, and the patch-feature matrix row-major.
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& dir);

/// One epoch per line: loss components, weights, held-out metrics.
std::string train_log_jsonl(const TrainLog& log);

nlohmann::json eval_report_json(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

nlohmann::json ablation_report_json(const AblationReport& report);
std::string ablation_report_table(const AblationReport& report);

/// Output-directory staging: write into path(), then commit() renames the
/// temp directory onto the target (replacing it). Without commit(), the
/// destructor cleans up and the target is untouched.
class StagedDir {
public:
    explicit StagedDir(std::filesystem::path target);
    StagedDir(const StagedDir&) = delete;
    StagedDir& operator=(const StagedDir&) = delete;
    ~StagedDir();

    const std::filesystem::path& path() const { return temp_; }
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path temp_;
    bool committed_ = false;
};

} // namespace v2p
