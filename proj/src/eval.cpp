#include "v2p/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace v2p {

const char* decode_mode_name(DecodeMode m) {
    return m == DecodeMode::argmax ? "argmax" : "threshold";
}

DecodeMode parse_decode_mode(const std::string& name) {
    if (name == "argmax") return DecodeMode::argmax;
    if (name == "threshold") return DecodeMode::threshold_centroid;
    throw std::invalid_argument("unknown decode mode '" + name + "' (argmax|threshold)");
}

Point decode_click(const AttentionMap& attn, DecodeMode mode, double gamma) {
    if (attn.probs.empty()) {
        throw std::invalid_argument("decode_click: empty attention map");
    }
    std::uint32_t best = 0;
    for (std::uint32_t i = 1; i < attn.probs.size(); ++i) {
        if (attn.probs[i] > attn.probs[best]) best = i;
    }
    if (mode == DecodeMode::argmax) {
        return patch_region(attn.grid, best).center();
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("decode_click: gamma must be in (0,1]");
    }
    const double cutoff = gamma * attn.probs[best];
    double wsum = 0.0, x = 0.0, y = 0.0;
    for (std::uint32_t i = 0; i < attn.probs.size(); ++i) {
        if (attn.probs[i] >= cutoff) {
            const Point c = patch_region(attn.grid, i).center();
            wsum += attn.probs[i];
            x += attn.probs[i] * c.x;
            y += attn.probs[i] * c.y;
        }
    }
    return {x / wsum, y / wsum};
}

double element_accuracy(const std::vector<Point>& predictions,
                        const std::vector<BoundingBox>& targets) {
    if (predictions.size() != targets.size()) {
        throw std::invalid_argument("element_accuracy: size mismatch (" +
                                    std::to_string(predictions.size()) + " predictions, " +
                                    std::to_string(targets.size()) + " targets)");
    }
    if (predictions.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (targets[i].contains(predictions[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::vector<SizeClass> area_terciles(const std::vector<double>& areas) {
    const std::size_t n = areas.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return areas[a] < areas[b]; });
    std::vector<SizeClass> classes(n, SizeClass::small);
    for (std::size_t rank = 0; rank < n; ++rank) {
        SizeClass cls = SizeClass::large;
        if (rank * 3 < n) cls = SizeClass::small;
        else if (rank * 3 < 2 * n) cls = SizeClass::medium;
        classes[order[rank]] = cls;
    }
    return classes;
}

EvalReport size_stratified_report(const std::vector<EvalSample>& samples,
                                  const std::vector<Point>& predictions,
                                  DecodeMode mode, double gamma) {
    if (samples.size() != predictions.size()) {
        throw std::invalid_argument("size_stratified_report: size mismatch");
    }
    EvalReport report;
    report.sample_count = samples.size();
    report.mode = mode;
    report.gamma = gamma;
    if (samples.empty()) return report;

    // Derive tercile classes only for samples that do not carry one.
    std::vector<SizeClass> classes(samples.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].size_class) classes[i] = *samples[i].size_class;
        else missing.push_back(i);
    }
    if (!missing.empty()) {
        std::vector<double> areas(missing.size());
        for (std::size_t k = 0; k < missing.size(); ++k) {
            areas[k] = samples[missing[k]].target.area();
        }
        const std::vector<SizeClass> derived = area_terciles(areas);
        for (std::size_t k = 0; k < missing.size(); ++k) {
            classes[missing[k]] = derived[k];
        }
    }

    std::size_t hits = 0;
    std::map<std::string, std::size_t> class_hits, cat_hits;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const bool hit = samples[i].target.contains(predictions[i]);
        if (hit) ++hits;
        const std::string cls = size_class_name(classes[i]);
        ++report.size_class_counts[cls];
        if (hit) ++class_hits[cls];
        else class_hits.try_emplace(cls, 0);
        if (samples[i].category) {
            ++report.category_counts[*samples[i].category];
            if (hit) ++cat_hits[*samples[i].category];
            else cat_hits.try_emplace(*samples[i].category, 0);
        }
    }
    report.overall = static_cast<double>(hits) / static_cast<double>(samples.size());
    for (const auto& [cls, count] : report.size_class_counts) {
        report.per_size_class[cls] =
            static_cast<double>(class_hits[cls]) / static_cast<double>(count);
    }
    for (const auto& [cat, count] : report.category_counts) {
        report.per_category[cat] =
            static_cast<double>(cat_hits[cat]) / static_cast<double>(count);
    }
    return report;
}

} // namespace v2p
