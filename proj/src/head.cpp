#include "v2p/head.hpp"

#include "v2p/error.hpp"
#include "v2p/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace v2p {

namespace {

void check_dims(const HeadParameters& params, const PatchFeatures& feats,
                const QueryEmbedding& query) {
    const auto& c = params.config;
    if (feats.dim != c.feature_dim) {
        throw std::invalid_argument("head: feature dim " + std::to_string(feats.dim) +
                                    " != configured " + std::to_string(c.feature_dim));
    }
    if (query.size() != c.query_dim) {
        throw std::invalid_argument("head: query dim " + std::to_string(query.size()) +
                                    " != configured " + std::to_string(c.query_dim));
    }
    if (feats.count == 0) {
        throw std::invalid_argument("head: empty patch features");
    }
}

void softmax_inplace(double* x, std::size_t n) {
    double mx = x[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    for (std::size_t i = 0; i < n; ++i) x[i] /= sum;
}

/// y = W2 tanh(W1 x + b1) + b2; hidden activations written to `hidden`.
void mlp_forward(const Mlp& mlp, const double* x, double* hidden, double* y) {
    matvec(mlp.w1, x, hidden);
    for (std::size_t h = 0; h < mlp.hidden_dim(); ++h) {
        hidden[h] = std::tanh(hidden[h] + mlp.b1[h]);
    }
    matvec(mlp.w2, hidden, y);
    for (std::size_t o = 0; o < mlp.out_dim(); ++o) y[o] += mlp.b2[o];
}

/// Backward through one MLP application. `dx`, when non-null, accumulates the
/// gradient w.r.t. the input.
void mlp_backward(const Mlp& mlp, const double* x, const double* hidden,
                  const double* dy, Mlp& grad, double* dx, double* scratch_dh) {
    const std::size_t dh = mlp.hidden_dim();
    for (std::size_t o = 0; o < mlp.out_dim(); ++o) grad.b2[o] += dy[o];
    outer_acc(grad.w2, dy, hidden);
    std::fill(scratch_dh, scratch_dh + dh, 0.0);
    matvec_transpose_acc(mlp.w2, dy, scratch_dh);
    for (std::size_t h = 0; h < dh; ++h) {
        scratch_dh[h] *= 1.0 - hidden[h] * hidden[h]; // tanh'
        grad.b1[h] += scratch_dh[h];
    }
    outer_acc(grad.w1, scratch_dh, x);
    if (dx) matvec_transpose_acc(mlp.w1, scratch_dh, dx);
}

void fill_uniform(Rng& rng, std::vector<double>& v, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : v) x = rng.uniform(-bound, bound);
}

Mlp make_mlp(std::size_t in, std::size_t hidden, std::size_t out) {
    Mlp mlp;
    mlp.w1 = Matrix(hidden, in);
    mlp.b1.assign(hidden, 0.0);
    mlp.w2 = Matrix(out, hidden);
    mlp.b2.assign(out, 0.0);
    return mlp;
}

void init_mlp(Rng& rng, Mlp& mlp) {
    fill_uniform(rng, mlp.w1.a, mlp.w1.cols);
    fill_uniform(rng, mlp.b1, mlp.w1.cols);
    fill_uniform(rng, mlp.w2.a, mlp.w2.cols);
    fill_uniform(rng, mlp.b2, mlp.w2.cols);
}

template <typename Fn>
void for_each_array(HeadParameters& p, Fn&& fn) {
    fn(p.w_q.a);
    fn(p.w_k.a);
    fn(p.w_v.a);
    fn(p.mlp_t.w1.a); fn(p.mlp_t.b1); fn(p.mlp_t.w2.a); fn(p.mlp_t.b2);
    fn(p.mlp_v.w1.a); fn(p.mlp_v.b1); fn(p.mlp_v.w2.a); fn(p.mlp_v.b2);
}

template <typename Fn>
void for_each_array(const HeadParameters& p, Fn&& fn) {
    fn(p.w_q.a);
    fn(p.w_k.a);
    fn(p.w_v.a);
    fn(p.mlp_t.w1.a); fn(p.mlp_t.b1); fn(p.mlp_t.w2.a); fn(p.mlp_t.b2);
    fn(p.mlp_v.w1.a); fn(p.mlp_v.b1); fn(p.mlp_v.w2.a); fn(p.mlp_v.b2);
}

template <typename Fn>
void for_each_array(const HeadGradients& g, Fn&& fn) {
    fn(g.w_q.a);
    fn(g.w_k.a);
    fn(g.w_v.a);
    fn(g.mlp_t.w1.a); fn(g.mlp_t.b1); fn(g.mlp_t.w2.a); fn(g.mlp_t.b2);
    fn(g.mlp_v.w1.a); fn(g.mlp_v.b1); fn(g.mlp_v.w2.a); fn(g.mlp_v.b2);
}

template <typename Fn>
void for_each_array(HeadGradients& g, Fn&& fn) {
    fn(g.w_q.a);
    fn(g.w_k.a);
    fn(g.w_v.a);
    fn(g.mlp_t.w1.a); fn(g.mlp_t.b1); fn(g.mlp_t.w2.a); fn(g.mlp_t.b2);
    fn(g.mlp_v.w1.a); fn(g.mlp_v.b1); fn(g.mlp_v.w2.a); fn(g.mlp_v.b2);
}

} // namespace

std::size_t HeadParameters::parameter_count() const {
    std::size_t n = 0;
    for_each_array(*this, [&](const std::vector<double>& a) { n += a.size(); });
    return n;
}

std::vector<double> HeadParameters::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for_each_array(*this, [&](const std::vector<double>& a) {
        flat.insert(flat.end(), a.begin(), a.end());
    });
    return flat;
}

void HeadParameters::unflatten(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) {
        throw std::invalid_argument("unflatten: expected " + std::to_string(parameter_count()) +
                                    " values, got " + std::to_string(flat.size()));
    }
    std::size_t off = 0;
    for_each_array(*this, [&](std::vector<double>& a) {
        std::copy(flat.begin() + off, flat.begin() + off + a.size(), a.begin());
        off += a.size();
    });
}

HeadParameters init_head(const HeadConfig& config) {
    HeadParameters p;
    p.config = config;
    const std::size_t dv = config.feature_dim;
    p.w_q = Matrix(dv, dv);
    p.w_k = Matrix(dv, dv);
    p.w_v = Matrix(dv, dv);
    p.mlp_t = make_mlp(config.query_dim, config.hidden_dim, config.embed_dim);
    p.mlp_v = make_mlp(dv, config.hidden_dim, config.embed_dim);

    Rng rng(derive_seed(config.seed, 0x68656164)); // "head"
    fill_uniform(rng, p.w_q.a, dv);
    fill_uniform(rng, p.w_k.a, dv);
    fill_uniform(rng, p.w_v.a, dv);
    init_mlp(rng, p.mlp_t);
    init_mlp(rng, p.mlp_v);
    return p;
}

namespace {

/// Fills proj_q/k/v, attn_rows and contextualized in the trace.
void self_attention(const HeadParameters& params, const PatchFeatures& feats,
                    ForwardTrace& trace) {
    const std::size_t m = feats.count;
    const std::size_t dv = feats.dim;
    if (dv != params.config.feature_dim) {
        throw std::invalid_argument("self_attention: feature dim mismatch");
    }

    trace.proj_q.resize(m * dv);
    trace.proj_k.resize(m * dv);
    trace.proj_v.resize(m * dv);
    for (std::size_t i = 0; i < m; ++i) {
        matvec(params.w_q, feats.row(i), trace.proj_q.data() + i * dv);
        matvec(params.w_k, feats.row(i), trace.proj_k.data() + i * dv);
        matvec(params.w_v, feats.row(i), trace.proj_v.data() + i * dv);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(dv));
    trace.attn_rows = Matrix(m, m);
    trace.contextualized = PatchFeatures(m, dv);
    for (std::size_t i = 0; i < m; ++i) {
        double* row = trace.attn_rows.row(i);
        const double* qi = trace.proj_q.data() + i * dv;
        for (std::size_t j = 0; j < m; ++j) {
            row[j] = dot(qi, trace.proj_k.data() + j * dv, dv) * scale;
        }
        softmax_inplace(row, m);
        double* oi = trace.contextualized.row(i);
        const double* vi = feats.row(i);
        for (std::size_t c = 0; c < dv; ++c) oi[c] = vi[c]; // residual
        for (std::size_t j = 0; j < m; ++j) {
            const double w = row[j];
            const double* vj = trace.proj_v.data() + j * dv;
            for (std::size_t c = 0; c < dv; ++c) oi[c] += w * vj[c];
        }
    }
}

} // namespace

PatchFeatures contextualize(const HeadParameters& params, const PatchFeatures& feats) {
    ForwardTrace trace;
    self_attention(params, feats, trace);
    return std::move(trace.contextualized);
}

AttentionMap attention_forward_traced(const HeadParameters& params,
                                      const PatchFeatures& feats,
                                      const QueryEmbedding& query, const PatchGrid& grid,
                                      ForwardTrace& trace) {
    check_dims(params, feats, query);
    const std::size_t m = feats.count;
    if (grid.patch_count() != m) {
        throw std::invalid_argument("head: grid patch count " +
                                    std::to_string(grid.patch_count()) +
                                    " != feature count " + std::to_string(m));
    }
    const auto& c = params.config;

    self_attention(params, feats, trace);

    // Twin projections into the shared embedding space.
    trace.mlp_t_hidden.resize(c.hidden_dim);
    trace.z.resize(c.embed_dim);
    mlp_forward(params.mlp_t, query.data(), trace.mlp_t_hidden.data(), trace.z.data());

    trace.mlp_v_hidden.resize(m * c.hidden_dim);
    trace.z_rows.resize(m * c.embed_dim);
    for (std::size_t i = 0; i < m; ++i) {
        mlp_forward(params.mlp_v, trace.contextualized.row(i),
                    trace.mlp_v_hidden.data() + i * c.hidden_dim,
                    trace.z_rows.data() + i * c.embed_dim);
    }

    const double scale_d = 1.0 / std::sqrt(static_cast<double>(c.embed_dim));
    trace.logits.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        trace.logits[i] = dot(trace.z.data(), trace.z_rows.data() + i * c.embed_dim,
                              c.embed_dim) * scale_d;
    }
    trace.probs = trace.logits;
    softmax_inplace(trace.probs.data(), m);

    for (double p : trace.probs) {
        if (!std::isfinite(p)) {
            throw NumericError("attention_forward: non-finite attention probability");
        }
    }

    AttentionMap map;
    map.grid = grid;
    map.probs = trace.probs;
    return map;
}

AttentionMap attention_forward(const HeadParameters& params, const PatchFeatures& feats,
                               const QueryEmbedding& query, const PatchGrid& grid) {
    ForwardTrace trace;
    return attention_forward_traced(params, feats, query, grid, trace);
}

HeadGradients zero_gradients(const HeadConfig& config) {
    HeadGradients g;
    const std::size_t dv = config.feature_dim;
    g.w_q = Matrix(dv, dv);
    g.w_k = Matrix(dv, dv);
    g.w_v = Matrix(dv, dv);
    g.mlp_t = make_mlp(config.query_dim, config.hidden_dim, config.embed_dim);
    g.mlp_v = make_mlp(dv, config.hidden_dim, config.embed_dim);
    return g;
}

void HeadGradients::accumulate(const HeadGradients& other) {
    auto add = [](std::vector<double>& dst, const std::vector<double>& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    add(w_q.a, other.w_q.a);
    add(w_k.a, other.w_k.a);
    add(w_v.a, other.w_v.a);
    add(mlp_t.w1.a, other.mlp_t.w1.a); add(mlp_t.b1, other.mlp_t.b1);
    add(mlp_t.w2.a, other.mlp_t.w2.a); add(mlp_t.b2, other.mlp_t.b2);
    add(mlp_v.w1.a, other.mlp_v.w1.a); add(mlp_v.b1, other.mlp_v.b1);
    add(mlp_v.w2.a, other.mlp_v.w2.a); add(mlp_v.b2, other.mlp_v.b2);
}

void HeadGradients::scale(double factor) {
    for_each_array(*this, [factor](std::vector<double>& a) {
        for (double& x : a) x *= factor;
    });
}

std::vector<double> HeadGradients::flatten() const {
    std::vector<double> flat;
    for_each_array(*this, [&](const std::vector<double>& a) {
        flat.insert(flat.end(), a.begin(), a.end());
    });
    return flat;
}

HeadGradients backward(const HeadParameters& params, const PatchFeatures& feats,
                       const QueryEmbedding& query, const ForwardTrace& trace,
                       const std::vector<double>& dprobs) {
    check_dims(params, feats, query);
    const std::size_t m = feats.count;
    const std::size_t dv = feats.dim;
    const auto& c = params.config;
    if (dprobs.size() != m) {
        throw std::invalid_argument("backward: upstream gradient size mismatch");
    }

    HeadGradients g = zero_gradients(c);

    // Softmax over logits: dalpha_i = a_i (g_i - sum_j g_j a_j).
    double inner = 0.0;
    for (std::size_t i = 0; i < m; ++i) inner += dprobs[i] * trace.probs[i];
    std::vector<double> dalpha(m);
    for (std::size_t i = 0; i < m; ++i) {
        dalpha[i] = trace.probs[i] * (dprobs[i] - inner);
    }

    // alpha_i = <z, z_i> / sqrt(d).
    const double scale_d = 1.0 / std::sqrt(static_cast<double>(c.embed_dim));
    std::vector<double> dz(c.embed_dim, 0.0);
    std::vector<double> dz_rows(m * c.embed_dim);
    for (std::size_t i = 0; i < m; ++i) {
        const double a = dalpha[i] * scale_d;
        const double* zi = trace.z_rows.data() + i * c.embed_dim;
        double* dzi = dz_rows.data() + i * c.embed_dim;
        for (std::size_t k = 0; k < c.embed_dim; ++k) {
            dz[k] += a * zi[k];
            dzi[k] = a * trace.z[k];
        }
    }

    std::vector<double> scratch_dh(c.hidden_dim);

    // Query-side MLP.
    mlp_backward(params.mlp_t, query.data(), trace.mlp_t_hidden.data(), dz.data(),
                 g.mlp_t, nullptr, scratch_dh.data());

    // Patch-side MLP, accumulating gradients into the contextualized features.
    std::vector<double> dctx(m * dv, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        mlp_backward(params.mlp_v, trace.contextualized.row(i),
                     trace.mlp_v_hidden.data() + i * c.hidden_dim,
                     dz_rows.data() + i * c.embed_dim, g.mlp_v,
                     dctx.data() + i * dv, scratch_dh.data());
    }

    // Self-attention backward. Residual: d(output_i)/d(v_i) part is not
    // needed (inputs are data, not parameters); do_i = dctx_i.
    const double scale_v = 1.0 / std::sqrt(static_cast<double>(dv));

    // dV_j = sum_i A_ij do_i ; dA_ij = <do_i, V_j>.
    std::vector<double> dproj_v(m * dv, 0.0);
    Matrix dattn(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* doi = dctx.data() + i * dv;
        const double* arow = trace.attn_rows.row(i);
        double* darow = dattn.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* vj = trace.proj_v.data() + j * dv;
            double* dvj = dproj_v.data() + j * dv;
            const double aij = arow[j];
            double acc = 0.0;
            for (std::size_t cc = 0; cc < dv; ++cc) {
                acc += doi[cc] * vj[cc];
                dvj[cc] += aij * doi[cc];
            }
            darow[j] = acc;
        }
    }

    // Row softmax backward: dS_ij = A_ij (dA_ij - sum_k dA_ik A_ik).
    std::vector<double> dproj_q(m * dv, 0.0);
    std::vector<double> dproj_k(m * dv, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = trace.attn_rows.row(i);
        double* darow = dattn.row(i);
        double row_inner = 0.0;
        for (std::size_t j = 0; j < m; ++j) row_inner += darow[j] * arow[j];
        const double* qi = trace.proj_q.data() + i * dv;
        double* dqi = dproj_q.data() + i * dv;
        for (std::size_t j = 0; j < m; ++j) {
            const double ds = arow[j] * (darow[j] - row_inner) * scale_v;
            const double* kj = trace.proj_k.data() + j * dv;
            double* dkj = dproj_k.data() + j * dv;
            for (std::size_t cc = 0; cc < dv; ++cc) {
                dqi[cc] += ds * kj[cc];
                dkj[cc] += ds * qi[cc];
            }
        }
    }

    // Projection weight gradients.
    for (std::size_t i = 0; i < m; ++i) {
        outer_acc(g.w_q, dproj_q.data() + i * dv, feats.row(i));
        outer_acc(g.w_k, dproj_k.data() + i * dv, feats.row(i));
        outer_acc(g.w_v, dproj_v.data() + i * dv, feats.row(i));
    }

    return g;
}

void sgd_step(HeadParameters& params, const HeadGradients& grads, double lr) {
    auto step = [lr](std::vector<double>& p, const std::vector<double>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    };
    step(params.w_q.a, grads.w_q.a);
    step(params.w_k.a, grads.w_k.a);
    step(params.w_v.a, grads.w_v.a);
    step(params.mlp_t.w1.a, grads.mlp_t.w1.a); step(params.mlp_t.b1, grads.mlp_t.b1);
    step(params.mlp_t.w2.a, grads.mlp_t.w2.a); step(params.mlp_t.b2, grads.mlp_t.b2);
    step(params.mlp_v.w1.a, grads.mlp_v.w1.a); step(params.mlp_v.b1, grads.mlp_v.b1);
    step(params.mlp_v.w2.a, grads.mlp_v.w2.a); step(params.mlp_v.b2, grads.mlp_v.b2);
}

} // namespace v2p
