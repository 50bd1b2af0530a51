// Compares the OpenMP kernels against their serial reference implementations:
// label map construction, batched gradient accumulation, and corpus
// generation. Reports wall time per call and the speedup, and checks that
// both paths agree bitwise where determinism is promised.

#include "v2p/head.hpp"
#include "v2p/labels.hpp"
#include "v2p/synth.hpp"
#include "v2p/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

using namespace v2p;

namespace {

double time_call(const std::function<void()>& fn, int reps) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    return dt.count() / reps;
}

void report(const char* name, double serial_s, double parallel_s, bool match) {
    std::printf("%-18s serial %9.4f ms   parallel %9.4f ms   speedup %5.2fx   %s\n", name,
                serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                match ? "outputs match" : "OUTPUTS DIFFER");
}

bool bench_labels(int reps) {
    PatchGrid grid(1024, 1024, 16);
    BoundingBox box{213.0, 377.0, 488.5, 902.25};
    LabelMap lm_p = gaussian_label_map(grid, box, 1.0);
    LabelMap lm_s = gaussian_label_map_serial(grid, box, 1.0);
    const bool match = lm_p.values == lm_s.values;
    const double ts = time_call([&] { gaussian_label_map_serial(grid, box, 1.0); }, reps);
    const double tp = time_call([&] { gaussian_label_map(grid, box, 1.0); }, reps);
    report("label-map 64x64", ts, tp, match);
    return match;
}

bool bench_gradients(int reps) {
    SynthConfig sc;
    Corpus corpus = generate_corpus(sc, 64);
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 64;

    tc.parallel = false;
    TrainResult serial = train(tc, corpus);
    tc.parallel = true;
    TrainResult parallel = train(tc, corpus);
    const bool match = serial.params.flatten() == parallel.params.flatten();

    tc.parallel = false;
    const double ts = time_call([&] { train(tc, corpus); }, reps);
    tc.parallel = true;
    const double tp = time_call([&] { train(tc, corpus); }, reps);
    report("batch gradient", ts, tp, match);
    return match;
}

bool bench_corpus(int reps, std::uint64_t scenes) {
    SynthConfig sc;
    Corpus serial = generate_corpus_serial(sc, scenes);
    Corpus parallel = generate_corpus(sc, scenes);
    bool match = serial.samples.size() == parallel.samples.size();
    for (std::size_t i = 0; match && i < serial.samples.size(); ++i) {
        match = serial.samples[i].feats.data == parallel.samples[i].feats.data &&
                serial.samples[i].query == parallel.samples[i].query;
    }
    const double ts = time_call([&] { generate_corpus_serial(sc, scenes); }, reps);
    const double tp = time_call([&] { generate_corpus(sc, scenes); }, reps);
    report("corpus synth", ts, tp, match);
    return match;
}

} // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) quick = true;
    }
    const int reps = quick ? 2 : 20;
    const std::uint64_t scenes = quick ? 64 : 512;

    bool ok = true;
    ok &= bench_labels(reps);
    ok &= bench_gradients(quick ? 1 : 5);
    ok &= bench_corpus(quick ? 1 : 5, scenes);
    if (!ok) {
        std::printf("mismatch between serial and parallel kernels\n");
        return 1;
    }
    return 0;
}
