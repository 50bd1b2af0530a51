#include "v2p/trainer.hpp"

#include "v2p/error.hpp"
#include "v2p/rng.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace v2p {

namespace {

constexpr std::uint64_t kShuffleTag = 0x73687566; // "shuf"

struct Supervision {
    LabelMap label;
    SuppressionSet sup;
};

Supervision build_supervision(const GroundingSample& s, const TrainConfig& cfg) {
    Supervision out;
    if (cfg.label_kind == LabelKind::gaussian) {
        out.label = gaussian_label_map_serial(s.grid, s.target, cfg.sigma_factor, cfg.epsilon);
    } else {
        out.label = uniform_label_map(s.grid, s.target);
    }
    out.sup = suppression_set(s.grid, s.target);
    return out;
}

void rethrow_first(const std::vector<std::string>& errors, const std::string& context) {
    for (const std::string& e : errors) {
        if (!e.empty()) throw NumericError(context + ": " + e);
    }
}

struct EvalMetrics {
    double accuracy = 0.0;
    double suppression_mass = 0.0;
};

/// One forward pass per held-out sample; decode hit rate plus mean attention
/// mass on the non-overlapping patches. Slot-per-sample writes keep the
/// parallel path identical to the serial one.
EvalMetrics evaluate_split(const HeadParameters& params, const Corpus& corpus,
                           std::size_t eval_begin,
                           const std::vector<SuppressionSet>& eval_sups,
                           const TrainConfig& cfg) {
    const std::size_t n_eval = corpus.samples.size() - eval_begin;
    if (n_eval == 0) return {};
    std::vector<char> hit(n_eval, 0);
    std::vector<double> mass(n_eval, 0.0);
    std::vector<std::string> errors(n_eval);
#pragma omp parallel for schedule(static) if (cfg.parallel)
    for (std::size_t k = 0; k < n_eval; ++k) {
        try {
            const GroundingSample& s = corpus.samples[eval_begin + k];
            const AttentionMap attn = attention_forward(params, s.feats, s.query, s.grid);
            const Point click = decode_click(attn, cfg.decode_mode, cfg.decode_gamma);
            hit[k] = s.target.contains(click) ? 1 : 0;
            double m = 0.0;
            for (std::uint32_t i : eval_sups[k].indices) m += attn.probs[i];
            mass[k] = m;
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }
    rethrow_first(errors, "evaluation failed");
    EvalMetrics out;
    std::size_t hits = 0;
    double total_mass = 0.0;
    for (std::size_t k = 0; k < n_eval; ++k) {
        hits += hit[k];
        total_mass += mass[k];
    }
    out.accuracy = static_cast<double>(hits) / static_cast<double>(n_eval);
    out.suppression_mass = total_mass / static_cast<double>(n_eval);
    return out;
}

/// Per-sample forward/backward over one batch, gradients reduced in index
/// order, then a single SGD step. Returns the summed loss components.
LossBreakdown run_batch(HeadParameters& params, const Corpus& corpus,
                        const std::vector<Supervision>& supervision,
                        const std::vector<std::size_t>& order, std::size_t begin,
                        std::size_t end, const TrainConfig& cfg, double lambda1_eff,
                        std::size_t epoch, std::size_t batch_index) {
    const std::size_t n = end - begin;
    std::vector<HeadGradients> grads(n);
    std::vector<LossBreakdown> breakdowns(n);
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(static) if (cfg.parallel)
    for (std::size_t k = 0; k < n; ++k) {
        try {
            const std::size_t idx = order[begin + k];
            const GroundingSample& s = corpus.samples[idx];
            const Supervision& sv = supervision[idx];
            ForwardTrace trace;
            const AttentionMap attn =
                attention_forward_traced(params, s.feats, s.query, s.grid, trace);
            const CombinedLoss loss =
                combined_loss(sv.label, attn, sv.sup, lambda1_eff, cfg.lambda2);
            breakdowns[k] = loss.breakdown;
            grads[k] = backward(params, s.feats, s.query, trace, loss.grad);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }

    std::ostringstream where;
    where << "epoch " << epoch << ", batch " << batch_index;
    rethrow_first(errors, where.str());

    LossBreakdown sum;
    sum.lambda1 = lambda1_eff;
    sum.lambda2 = cfg.lambda2;
    for (std::size_t k = 0; k < n; ++k) {
        const LossBreakdown& b = breakdowns[k];
        if (!std::isfinite(b.total)) {
            std::ostringstream msg;
            msg << "non-finite loss at " << where.str() << " (l_ntp=" << b.l_ntp
                << ", l_sup=" << b.l_sup << ", l_attn=" << b.l_attn << ", total=" << b.total
                << ")";
            throw NumericError(msg.str());
        }
        sum.l_ntp += b.l_ntp;
        sum.l_sup += b.l_sup;
        sum.l_attn += b.l_attn;
        sum.total += b.total;
    }

    HeadGradients step = zero_gradients(params.config);
    for (std::size_t k = 0; k < n; ++k) step.accumulate(grads[k]);
    step.scale(1.0 / static_cast<double>(n));
    sgd_step(params, step, cfg.learning_rate);
    return sum;
}

std::string format_factor(double sf) {
    std::ostringstream os;
    os << sf;
    return os.str();
}

void finalize_cell(AblationCell& cell) {
    const std::size_t k = cell.overall.size();
    if (k == 0) return;
    double mean = 0.0;
    for (double v : cell.overall) mean += v;
    mean /= static_cast<double>(k);
    cell.mean_overall = mean;
    if (k > 1) {
        double ss = 0.0;
        for (double v : cell.overall) ss += (v - mean) * (v - mean);
        cell.stddev_overall = std::sqrt(ss / static_cast<double>(k - 1));
    }
    for (const auto& [cls, values] : cell.per_size_class) {
        double m = 0.0;
        for (double v : values) m += v;
        cell.mean_per_size_class[cls] = m / static_cast<double>(values.size());
    }
}

} // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(eval_split > 0.0 && eval_split < 1.0)) {
        throw std::invalid_argument("eval_split must be in (0,1)");
    }
    if (lambda1 < 0.0 || lambda2 < 0.0) {
        throw std::invalid_argument("loss weights must be non-negative");
    }
    if (!(sigma_factor > 0.0)) throw std::invalid_argument("sigma_factor must be > 0");
    if (epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
    if (hidden_dim < 1 || embed_dim < 1) {
        throw std::invalid_argument("head dimensions must be >= 1");
    }
    if (!(decode_gamma > 0.0 && decode_gamma <= 1.0)) {
        throw std::invalid_argument("decode_gamma must be in (0,1]");
    }
    if (target_accuracy < 0.0 || target_accuracy > 1.0) {
        throw std::invalid_argument("target_accuracy must be in [0,1]");
    }
}

TrainResult train(const TrainConfig& config, const Corpus& corpus) {
    config.validate();
    if (corpus.samples.empty()) throw std::invalid_argument("train: corpus is empty");

    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = corpus.samples.size();
    const std::size_t n_eval =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.eval_split));
    const std::size_t n_train = n - n_eval;

    HeadConfig head_cfg;
    head_cfg.feature_dim = corpus.config.feature_dim;
    head_cfg.query_dim = corpus.config.query_dim;
    head_cfg.hidden_dim = config.hidden_dim;
    head_cfg.embed_dim = config.embed_dim;
    head_cfg.seed = config.seed;
    HeadParameters params = init_head(head_cfg);

    std::vector<Supervision> supervision(n_train);
    {
        std::vector<std::string> errors(n_train);
#pragma omp parallel for schedule(static) if (config.parallel)
        for (std::size_t i = 0; i < n_train; ++i) {
            try {
                supervision[i] = build_supervision(corpus.samples[i], config);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
        rethrow_first(errors, "label construction failed");
    }
    std::vector<SuppressionSet> eval_sups(n_eval);
    for (std::size_t k = 0; k < n_eval; ++k) {
        eval_sups[k] =
            suppression_set(corpus.samples[n_train + k].grid, corpus.samples[n_train + k].target);
    }

    const double lambda1_eff = config.suppression ? config.lambda1 : 0.0;

    TrainLog log;
    log.train_count = n_train;
    log.eval_count = n_eval;
    const EvalMetrics init = evaluate_split(params, corpus, n_train, eval_sups, config);
    log.initial_accuracy = init.accuracy;
    log.initial_suppression_mass = init.suppression_mass;

    std::vector<std::size_t> order(n_train);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(derive_seed(config.seed, kShuffleTag + epoch));
        shuffle_rng.shuffle(order);

        LossBreakdown epoch_sum;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < n_train; begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, n_train);
            const LossBreakdown b = run_batch(params, corpus, supervision, order, begin, end,
                                              config, lambda1_eff, epoch, batch_index);
            epoch_sum.l_ntp += b.l_ntp;
            epoch_sum.l_sup += b.l_sup;
            epoch_sum.l_attn += b.l_attn;
            epoch_sum.total += b.total;
            ++batch_index;
        }

        EpochStats st;
        st.epoch = epoch;
        st.mean_loss.l_ntp = epoch_sum.l_ntp / static_cast<double>(n_train);
        st.mean_loss.l_sup = epoch_sum.l_sup / static_cast<double>(n_train);
        st.mean_loss.l_attn = epoch_sum.l_attn / static_cast<double>(n_train);
        st.mean_loss.total = epoch_sum.total / static_cast<double>(n_train);
        st.mean_loss.lambda1 = lambda1_eff;
        st.mean_loss.lambda2 = config.lambda2;
        const EvalMetrics m = evaluate_split(params, corpus, n_train, eval_sups, config);
        st.eval_accuracy = m.accuracy;
        st.eval_suppression_mass = m.suppression_mass;
        log.epochs.push_back(st);

        if (config.target_accuracy > 0.0 && n_eval > 0 &&
            m.accuracy >= config.target_accuracy) {
            break;
        }
    }

    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(params), std::move(log)};
}

CorpusEval evaluate_corpus(const HeadParameters& params, const Corpus& corpus,
                           std::size_t first_sample, DecodeMode mode, double gamma,
                           bool parallel) {
    if (first_sample > corpus.samples.size()) {
        throw std::invalid_argument("evaluate_corpus: first_sample out of range");
    }
    const std::size_t n = corpus.samples.size() - first_sample;
    std::vector<Point> preds(n);
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t k = 0; k < n; ++k) {
        try {
            const GroundingSample& s = corpus.samples[first_sample + k];
            const AttentionMap attn = attention_forward(params, s.feats, s.query, s.grid);
            preds[k] = decode_click(attn, mode, gamma);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }
    rethrow_first(errors, "evaluation failed");

    std::vector<EvalSample> eval_samples;
    eval_samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        EvalSample es(corpus.samples[first_sample + k].target);
        es.size_class = corpus.samples[first_sample + k].size_class;
        eval_samples.push_back(std::move(es));
    }
    CorpusEval out;
    out.report = size_stratified_report(eval_samples, preds, mode, gamma);
    out.predictions = std::move(preds);
    return out;
}

AblationReport run_ablation_matrix(const TrainConfig& base, const Corpus& corpus,
                                   std::size_t num_seeds,
                                   const std::vector<double>& sigma_factors) {
    base.validate();
    if (num_seeds == 0) throw std::invalid_argument("num_seeds must be >= 1");
    if (corpus.samples.empty()) throw std::invalid_argument("ablation: corpus is empty");

    AblationReport report;
    report.seeds_per_cell = num_seeds;
    for (double sf : sigma_factors) {
        AblationCell c;
        c.name = "gaussian+suppression sf=" + format_factor(sf);
        c.label_kind = LabelKind::gaussian;
        c.suppression = true;
        c.sigma_factor = sf;
        report.cells.push_back(std::move(c));
    }
    {
        AblationCell c;
        c.name = "uniform+suppression";
        c.label_kind = LabelKind::uniform;
        c.suppression = true;
        report.cells.push_back(std::move(c));
    }
    {
        AblationCell c;
        c.name = "uniform";
        c.label_kind = LabelKind::uniform;
        c.suppression = false;
        report.cells.push_back(std::move(c));
    }

    const std::size_t n = corpus.samples.size();
    const std::size_t n_eval =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * base.eval_split));
    const std::size_t eval_begin = n - n_eval;

    for (AblationCell& cell : report.cells) {
        for (std::size_t j = 0; j < num_seeds; ++j) {
            TrainConfig cfg = base;
            cfg.label_kind = cell.label_kind;
            cfg.suppression = cell.suppression;
            if (cell.label_kind == LabelKind::gaussian) cfg.sigma_factor = cell.sigma_factor;
            cfg.seed = base.seed + j;

            TrainResult result = train(cfg, corpus);
            const CorpusEval ce = evaluate_corpus(result.params, corpus, eval_begin,
                                                  cfg.decode_mode, cfg.decode_gamma,
                                                  cfg.parallel);
            cell.seeds.push_back(cfg.seed);
            cell.overall.push_back(ce.report.overall);
            cell.final_suppression_mass.push_back(
                result.log.epochs.empty() ? result.log.initial_suppression_mass
                                          : result.log.epochs.back().eval_suppression_mass);
            for (const auto& [cls, acc] : ce.report.per_size_class) {
                cell.per_size_class[cls].push_back(acc);
            }
            cell.params.push_back(std::move(result.params));
        }
        finalize_cell(cell);
    }
    return report;
}

} // namespace v2p
