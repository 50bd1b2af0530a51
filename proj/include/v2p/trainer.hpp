#pragma once

#include "v2p/eval.hpp"
#include "v2p/head.hpp"
#include "v2p/labels.hpp"
#include "v2p/losses.hpp"
#include "v2p/synth.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace v2p {

struct TrainConfig {
    /// SGD on the bilinear scorer needs a large fixed rate to grow the logit
    /// scale; rates below ~1 stall within the default epoch budget.
    double learning_rate = 5.0;
    std::size_t batch_size = 32;
    std::size_t epochs = 30;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double sigma_factor = 1.0;
    double epsilon = 1e-6;
    LabelKind label_kind = LabelKind::gaussian;
    bool suppression = true; // when off, the suppression term carries no weight
    std::uint64_t seed = 0;
    double eval_split = 0.2; // tail fraction of the corpus held out
    std::size_t hidden_dim = 32;
    std::size_t embed_dim = 32;
    DecodeMode decode_mode = DecodeMode::threshold_centroid;
    double decode_gamma = 0.8;
    /// Stop once held-out accuracy reaches this value; 0 disables.
    double target_accuracy = 0.0;
    /// Parallel batch-gradient and eval kernels. Gradients are accumulated
    /// per sample and reduced in index order, so the result is bit-identical
    /// to the serial path at any thread count.
    bool parallel = true;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    LossBreakdown mean_loss; // averaged over the epoch's training samples
    double eval_accuracy = 0.0;
    /// Mean over the held-out split of the attention mass falling on
    /// patches that do not overlap the target.
    double eval_suppression_mass = 0.0;
};

struct TrainLog {
    /// Held-out metrics at initialization, before the first update.
    double initial_accuracy = 0.0;
    double initial_suppression_mass = 0.0;
    std::vector<EpochStats> epochs;
    std::size_t train_count = 0;
    std::size_t eval_count = 0;
    double wall_seconds = 0.0;
    std::string checkpoint; // filled by callers that persist the parameters
};

struct TrainResult {
    HeadParameters params;
    TrainLog log;
};

/// Fixed-rate SGD on the combined objective. Labels and suppression sets are
/// built once per sample from the config; the shuffle schedule is a pure
/// function of the seed, so identical (config, corpus) pairs give
/// bit-identical parameters. Throws NumericError (with epoch, batch, and
/// component losses) if the loss turns non-finite.
TrainResult train(const TrainConfig& config, const Corpus& corpus);

struct CorpusEval {
    EvalReport report;
    std::vector<Point> predictions; // one per evaluated sample, corpus order
};

/// Forward + decode over corpus samples [first_sample, end), stratified by
/// the samples' own size classes. first_sample = 0 evaluates everything;
/// pass the training-split size to score a held-out tail.
CorpusEval evaluate_corpus(const HeadParameters& params, const Corpus& corpus,
                           std::size_t first_sample, DecodeMode mode, double gamma,
                           bool parallel = true);

/// One ablation configuration trained over several seeds.
struct AblationCell {
    std::string name;
    LabelKind label_kind = LabelKind::gaussian;
    bool suppression = true;
    double sigma_factor = 0.0; // 0 for uniform-label rows
    std::vector<std::uint64_t> seeds;
    std::vector<double> overall;                 // per seed
    std::vector<double> final_suppression_mass;  // per seed
    std::map<std::string, std::vector<double>> per_size_class; // per seed
    double mean_overall = 0.0;
    double stddev_overall = 0.0;
    std::map<std::string, double> mean_per_size_class;
    /// Final parameters per seed, for checkpointing and re-evaluation.
    std::vector<HeadParameters> params;
};

struct AblationReport {
    std::vector<AblationCell> cells;
    std::size_t seeds_per_cell = 0;
};

/// Trains the grid {gaussian labels + suppression at each sigma factor,
/// uniform labels + suppression, uniform labels alone}, each over
/// `num_seeds` consecutive seeds starting at base.seed. Label kind,
/// suppression flag, and sigma factor of `base` are overridden per cell;
/// everything else is shared.
AblationReport run_ablation_matrix(const TrainConfig& base, const Corpus& corpus,
                                   std::size_t num_seeds = 5,
                                   const std::vector<double>& sigma_factors = {0.5, 1.0,
                                                                               6.0});

} // namespace v2p
