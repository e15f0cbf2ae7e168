#include "gaitscore/contrastive.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "gaitscore/encoder.hpp"
#include "gaitscore/errors.hpp"
#include "gaitscore/kernels.hpp"
#include "gaitscore/threads.hpp"

namespace gaitscore {

void AugmentConfig::validate() const {
    if (rot_deg < 0.0) throw ConfigError("augment: rot_deg must be >= 0");
    if (jitter_std < 0.0) throw ConfigError("augment: jitter_std must be >= 0");
    if (crop_frames < 2 || crop_frames > kSegmentFrames) {
        throw ConfigError("augment: crop_frames must lie in [2, 32]");
    }
    if (!(scale_lo > 0.0) || scale_lo > scale_hi) {
        throw ConfigError("augment: scale range must satisfy 0 < lo <= hi");
    }
    if (up_axis > 2) throw ConfigError("augment: up_axis must be 0, 1 or 2");
}

void ContrastiveConfig::validate() const {
    augment.validate();
    if (!(tau > 0.0)) throw ConfigError("contrastive: tau must be > 0");
    if (!(momentum >= 0.0f && momentum < 1.0f)) {
        throw ConfigError("contrastive: momentum must be in [0, 1)");
    }
    if (batch_size < 2) throw ConfigError("contrastive: batch_size must be >= 2");
    if (queue_size == 0 || queue_size % batch_size != 0) {
        throw ConfigError("contrastive: queue_size must be a positive multiple of batch_size");
    }
    if (epochs < 1) throw ConfigError("contrastive: epochs must be >= 1");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

Tensor augment_once(const Tensor& segment, Rng& rng, const AugmentConfig& aug) {
    // Fixed draw order: angle, crop start, scale, then jitter values, so the
    // stream layout does not depend on the magnitudes.
    const double angle = uniform_range(rng, -aug.rot_deg, aug.rot_deg) * kPi / 180.0;
    const std::size_t max_start = kSegmentFrames - aug.crop_frames;
    const std::size_t start = static_cast<std::size_t>(uniform_index(rng, max_start + 1));
    const double scale = uniform_range(rng, aug.scale_lo, aug.scale_hi);

    const std::size_t ax_a = (aug.up_axis + 1) % 3;  // plane rotated about up
    const std::size_t ax_b = (aug.up_axis + 2) % 3;
    const float c = static_cast<float>(std::cos(angle));
    const float s = static_cast<float>(std::sin(angle));

    Tensor work = segment;
    for (std::size_t t = 0; t < kSegmentFrames; ++t) {
        float* row = work.row(t);
        for (std::size_t j = 0; j < Skeleton17Frame::kJoints; ++j) {
            float* p = row + 3 * j;
            const float a = p[ax_a], b = p[ax_b];
            p[ax_a] = c * a - s * b;
            p[ax_b] = s * a + c * b;
        }
        for (std::size_t k = 0; k < kSegmentFeatures; ++k) {
            row[k] += static_cast<float>(aug.jitter_std * normal01(rng));
        }
    }

    // Temporal crop of crop_frames contiguous frames, resampled back to 32.
    Tensor out({kSegmentFrames, kSegmentFeatures});
    for (std::size_t t = 0; t < kSegmentFrames; ++t) {
        const double pos = static_cast<double>(start) +
                           static_cast<double>(t) * static_cast<double>(aug.crop_frames - 1) /
                               static_cast<double>(kSegmentFrames - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, kSegmentFrames - 1);
        const float w = static_cast<float>(pos - static_cast<double>(lo));
        const float* a = work.row(lo);
        const float* b = work.row(hi);
        float* dst = out.row(t);
        const float sf = static_cast<float>(scale);
        for (std::size_t k = 0; k < kSegmentFeatures; ++k) {
            dst[k] = ((1.0f - w) * a[k] + w * b[k]) * sf;
        }
    }
    return out;
}

void check_unit_norm(const Tensor& v, const char* what) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i) acc += static_cast<double>(v[i]) * v[i];
    const double norm = std::sqrt(acc);
    if (std::abs(norm - 1.0) > 1e-3) {
        throw NumericError(std::string("info_nce: ") + what + " is not L2-normalized, norm " +
                           std::to_string(norm));
    }
}

struct BatchViews {
    std::vector<Tensor> query;  // raw augmented views
    std::vector<Tensor> key;
};

// Views for one batch, one seeded stream per sample; with group_positives the
// key view comes from another segment of the same subject.
BatchViews make_batch_views(const std::vector<Segment>& dataset,
                            const std::vector<std::size_t>& batch_indices,
                            const std::map<std::string, std::vector<std::size_t>>& groups,
                            const ContrastiveConfig& cfg, std::uint64_t epoch_seed,
                            unsigned threads) {
    const std::size_t b = batch_indices.size();
    BatchViews views;
    views.query.resize(b);
    views.key.resize(b);
    parallel_for(b, threads, [&](std::size_t i) {
        const std::size_t d = batch_indices[i];
        Rng rng = make_rng(mix_seed(epoch_seed, d));
        const Tensor* key_source = &dataset[d].data;
        if (cfg.group_positives) {
            const auto& members = groups.at(dataset[d].subject_id);
            const std::size_t pick = static_cast<std::size_t>(uniform_index(rng, members.size()));
            key_source = &dataset[members[pick]].data;
        }
        views.query[i] = augment_once(dataset[d].data, rng, cfg.augment);
        views.key[i] = augment_once(*key_source, rng, cfg.augment);
    });
    return views;
}

std::map<std::string, std::vector<std::size_t>> group_index(const std::vector<Segment>& dataset) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        groups[dataset[i].subject_id].push_back(i);
    }
    return groups;
}

// Encode + L2-normalize a list of views. Caches are kept only when the
// caller needs gradients.
void encode_views(const ParamSet& params, const std::vector<Tensor>& views, Tensor& normalized,
                  Tensor& raw, std::vector<EncodeCache>* caches, unsigned threads) {
    const std::size_t n = views.size();
    const std::size_t embed = params.arch().embed_dim();
    normalized = Tensor({n, embed});
    raw = Tensor({n, embed});
    if (caches) caches->resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        EncodeCache local;
        EncodeCache& cache = caches ? (*caches)[i] : local;
        Tensor z = encode_forward(params, views[i], cache);
        Tensor zn = l2_normalize(z);
        float* r = raw.row(i);
        float* nrm = normalized.row(i);
        for (std::size_t d = 0; d < embed; ++d) {
            r[d] = z[d];
            nrm[d] = zn[d];
        }
    });
}

}  // namespace

ViewPair make_views(const Tensor& segment, Rng& rng, const AugmentConfig& aug) {
    aug.validate();
    if (segment.rank() != 2 || segment.dim(0) != kSegmentFrames ||
        segment.dim(1) != kSegmentFeatures) {
        throw ShapeError("make_views: segment shape " + segment.shape_str() + " != expected " +
                         shape_to_string({kSegmentFrames, kSegmentFeatures}));
    }
    ViewPair pair;
    pair.query_view = augment_once(segment, rng, aug);
    pair.key_view = augment_once(segment, rng, aug);
    return pair;
}

InfoNceResult info_nce(const Tensor& query, const Tensor& positive_key, const Tensor& negatives,
                       double tau) {
    if (!(tau > 0.0)) throw ConfigError("info_nce: tau must be > 0");
    if (query.rank() != 1 || !query.same_shape(positive_key)) {
        throw ShapeError("info_nce: query/positive shapes differ: " + query.shape_str() + " vs " +
                         positive_key.shape_str());
    }
    if (negatives.rank() != 2 || negatives.dim(1) != query.dim(0)) {
        throw ShapeError("info_nce: negatives shape " + negatives.shape_str() +
                         " incompatible with query length " + std::to_string(query.dim(0)));
    }
    const std::size_t n_neg = negatives.dim(0);
    if (n_neg < 1) throw InsufficientDataError("info_nce: need at least one negative");
    const std::size_t d = query.dim(0);
    check_unit_norm(query, "query");
    check_unit_norm(positive_key, "positive key");
    for (std::size_t i = 0; i < n_neg; ++i) {
        Tensor row({d});
        for (std::size_t k = 0; k < d; ++k) row[k] = negatives.at(i, k);
        check_unit_norm(row, "negative key");
    }

    // logits in double; inputs are unit vectors so dot == cosine similarity
    std::vector<double> logits(n_neg + 1);
    auto dot = [&](const float* a, const float* b) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += static_cast<double>(a[k]) * b[k];
        return acc;
    };
    logits[0] = dot(query.data(), positive_key.data()) / tau;
    for (std::size_t i = 0; i < n_neg; ++i) {
        logits[i + 1] = dot(query.data(), negatives.row(i)) / tau;
    }

    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - mx);
    const double log_denom = std::log(denom);
    const double loss = log_denom - (logits[0] - mx);

    InfoNceResult result{static_cast<float>(loss), Tensor({d})};
    std::vector<double> grad(d, 0.0);
    for (std::size_t i = 0; i < n_neg + 1; ++i) {
        double coeff = std::exp(logits[i] - mx - log_denom);
        if (i == 0) coeff -= 1.0;
        coeff /= tau;
        const float* k = (i == 0) ? positive_key.data() : negatives.row(i - 1);
        for (std::size_t j = 0; j < d; ++j) grad[j] += coeff * k[j];
    }
    for (std::size_t j = 0; j < d; ++j) result.grad_query[j] = static_cast<float>(grad[j]);
    return result;
}

MocoState make_moco_state(const ParamSet& query_params, const ContrastiveConfig& cfg) {
    cfg.validate();
    MocoState state;
    state.key_params = query_params;
    const std::size_t embed = query_params.arch().embed_dim();
    state.queue = Tensor({cfg.queue_size, embed});
    Rng rng = make_rng(mix_seed(cfg.seed, 0x71e5e));
    for (std::size_t i = 0; i < cfg.queue_size; ++i) {
        Tensor v({embed});
        for (std::size_t k = 0; k < embed; ++k) v[k] = static_cast<float>(normal01(rng));
        Tensor u = l2_normalize(v);
        float* row = state.queue.row(i);
        for (std::size_t k = 0; k < embed; ++k) row[k] = u[k];
    }
    state.ptr = 0;
    return state;
}

float e2e_epoch(ParamSet& params, AdamState& opt_state, const std::vector<Segment>& dataset,
                const ContrastiveConfig& cfg, const OptimConfig& optim, int epoch,
                unsigned threads) {
    cfg.validate();
    const std::size_t B = cfg.batch_size;
    if (dataset.size() < B) {
        throw InsufficientDataError("e2e: dataset has " + std::to_string(dataset.size()) +
                                    " segments, need at least " + std::to_string(B));
    }
    const std::size_t embed = params.arch().embed_dim();
    const auto groups = cfg.group_positives ? group_index(dataset)
                                            : std::map<std::string, std::vector<std::size_t>>{};

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = make_rng(mix_seed(cfg.seed, 0x5f0e), static_cast<std::uint64_t>(epoch));
    shuffle(order, shuffle_rng);
    const std::uint64_t epoch_seed = mix_seed(mix_seed(cfg.seed, 0xa09), static_cast<std::uint64_t>(epoch));

    double loss_acc = 0.0;
    std::size_t query_count = 0;
    const std::size_t n_batches = dataset.size() / B;  // remainder dropped

    for (std::size_t bi = 0; bi < n_batches; ++bi) {
        std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(bi * B),
                                       order.begin() + static_cast<std::ptrdiff_t>((bi + 1) * B));
        BatchViews views = make_batch_views(dataset, batch, groups, cfg, epoch_seed, threads);

        Tensor qn, qraw, kn, kraw;
        std::vector<EncodeCache> q_caches, k_caches;
        encode_views(params, views.query, qn, qraw, &q_caches, threads);
        encode_views(params, views.key, kn, kraw, &k_caches, threads);

        // Similarity matrix S[i][j] = <q_i, k_j> / tau, in double.
        std::vector<double> sim(B * B);
        parallel_for(B, threads, [&](std::size_t i) {
            const float* q = qn.row(i);
            for (std::size_t j = 0; j < B; ++j) {
                const float* k = kn.row(j);
                double acc = 0.0;
                for (std::size_t e = 0; e < embed; ++e) acc += static_cast<double>(q[e]) * k[e];
                sim[i * B + j] = acc / cfg.tau;
            }
        });

        // Symmetric InfoNCE over the in-batch negatives: direction A treats
        // row i as query-vs-keys, direction B column i as key-vs-queries.
        // Gradients reach each side through its own direction; the other
        // side's embeddings act as constants (stop-gradient), and the two
        // directions together train both encoder passes.
        Tensor grad_qn({B, embed});
        Tensor grad_kn({B, embed});
        double batch_loss = 0.0;

        std::vector<double> probs_a(B * B), probs_b(B * B);
        for (std::size_t i = 0; i < B; ++i) {
            // direction A: softmax over row i
            double mx = -1e300;
            for (std::size_t j = 0; j < B; ++j) mx = std::max(mx, sim[i * B + j]);
            double denom = 0.0;
            for (std::size_t j = 0; j < B; ++j) denom += std::exp(sim[i * B + j] - mx);
            const double log_denom = std::log(denom);
            batch_loss += log_denom - (sim[i * B + i] - mx);
            for (std::size_t j = 0; j < B; ++j) {
                probs_a[i * B + j] = std::exp(sim[i * B + j] - mx - log_denom);
            }
            // direction B: softmax over column i
            mx = -1e300;
            for (std::size_t j = 0; j < B; ++j) mx = std::max(mx, sim[j * B + i]);
            denom = 0.0;
            for (std::size_t j = 0; j < B; ++j) denom += std::exp(sim[j * B + i] - mx);
            const double log_denom_b = std::log(denom);
            batch_loss += log_denom_b - (sim[i * B + i] - mx);
            for (std::size_t j = 0; j < B; ++j) {
                probs_b[j * B + i] = std::exp(sim[j * B + i] - mx - log_denom_b);
            }
        }

        // dL/dq_i = sum_j (pA_ij - [i==j]) k_j / tau / (2B); symmetric for keys.
        const double scale = 1.0 / (2.0 * cfg.tau * static_cast<double>(B));
        parallel_for(B, threads, [&](std::size_t i) {
            float* gq = grad_qn.row(i);
            for (std::size_t e = 0; e < embed; ++e) {
                double acc = 0.0;
                for (std::size_t j = 0; j < B; ++j) {
                    const double coeff = probs_a[i * B + j] - (i == j ? 1.0 : 0.0);
                    acc += coeff * kn.at(j, e);
                }
                gq[e] = static_cast<float>(acc * scale);
            }
            float* gk = grad_kn.row(i);
            for (std::size_t e = 0; e < embed; ++e) {
                double acc = 0.0;
                for (std::size_t j = 0; j < B; ++j) {
                    const double coeff = probs_b[j * B + i] - (i == j ? 1.0 : 0.0);
                    acc += coeff * qn.at(j, e);
                }
                gk[e] = static_cast<float>(acc * scale);
            }
        });

        const float mean_loss = static_cast<float>(batch_loss / (2.0 * static_cast<double>(B)));
        if (!std::isfinite(mean_loss)) throw NumericError("e2e: non-finite loss, step aborted");

        // Through the normalization, then the encoder, for both view sets.
        Tensor grad_qraw({B, embed}), grad_kraw({B, embed});
        parallel_for(B, threads, [&](std::size_t i) {
            Tensor gz({embed}), z({embed});
            for (std::size_t e = 0; e < embed; ++e) {
                gz[e] = grad_qn.at(i, e);
                z[e] = qraw.at(i, e);
            }
            Tensor g = l2_normalize_backward(gz, z);
            for (std::size_t e = 0; e < embed; ++e) grad_qraw.at(i, e) = g[e];
            for (std::size_t e = 0; e < embed; ++e) {
                gz[e] = grad_kn.at(i, e);
                z[e] = kraw.at(i, e);
            }
            g = l2_normalize_backward(gz, z);
            for (std::size_t e = 0; e < embed; ++e) grad_kraw.at(i, e) = g[e];
        });

        ParamSet grads(params.arch());
        encode_backward_batch(params, q_caches, grad_qraw, grads, threads);
        encode_backward_batch(params, k_caches, grad_kraw, grads, threads);
        adam_step(params, grads, opt_state, optim);

        loss_acc += batch_loss / 2.0;
        query_count += B;
    }
    if (query_count == 0) throw InsufficientDataError("e2e: no complete batches");
    return static_cast<float>(loss_acc / static_cast<double>(query_count));
}

float moco_epoch(ParamSet& params, MocoState& state, AdamState& opt_state,
                 const std::vector<Segment>& dataset, const ContrastiveConfig& cfg,
                 const OptimConfig& optim, int epoch, unsigned threads) {
    cfg.validate();
    const std::size_t B = cfg.batch_size;
    if (B > cfg.queue_size) throw ConfigError("moco: batch size exceeds queue size");
    if (dataset.size() < B) {
        throw InsufficientDataError("moco: dataset has " + std::to_string(dataset.size()) +
                                    " segments, need at least " + std::to_string(B));
    }
    if (!params.same_manifest(state.key_params)) {
        throw ShapeError("moco: query/key parameter manifests differ");
    }
    if (state.queue.dim(0) != cfg.queue_size || state.queue.dim(1) != params.arch().embed_dim()) {
        throw ShapeError("moco: queue shape " + state.queue.shape_str() + " != expected " +
                         shape_to_string({cfg.queue_size, params.arch().embed_dim()}));
    }

    const std::size_t embed = params.arch().embed_dim();
    const auto groups = cfg.group_positives ? group_index(dataset)
                                            : std::map<std::string, std::vector<std::size_t>>{};

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = make_rng(mix_seed(cfg.seed, 0x30c0), static_cast<std::uint64_t>(epoch));
    shuffle(order, shuffle_rng);
    const std::uint64_t epoch_seed = mix_seed(mix_seed(cfg.seed, 0xb1d), static_cast<std::uint64_t>(epoch));

    double loss_acc = 0.0;
    std::size_t query_count = 0;
    const std::size_t n_batches = dataset.size() / B;

    for (std::size_t bi = 0; bi < n_batches; ++bi) {
        std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(bi * B),
                                       order.begin() + static_cast<std::ptrdiff_t>((bi + 1) * B));
        BatchViews views = make_batch_views(dataset, batch, groups, cfg, epoch_seed, threads);

        Tensor qn, qraw;
        std::vector<EncodeCache> q_caches;
        encode_views(params, views.query, qn, qraw, &q_caches, threads);

        Tensor kn, kraw;
        encode_views(state.key_params, views.key, kn, kraw, nullptr, threads);

        Tensor grad_qn({B, embed});
        std::vector<float> losses(B);
        parallel_for(B, threads, [&](std::size_t i) {
            Tensor q({embed}), k({embed});
            for (std::size_t e = 0; e < embed; ++e) {
                q[e] = qn.at(i, e);
                k[e] = kn.at(i, e);
            }
            InfoNceResult r = info_nce(q, k, state.queue, cfg.tau);
            losses[i] = r.loss;
            float* g = grad_qn.row(i);
            const float inv_b = 1.0f / static_cast<float>(B);
            for (std::size_t e = 0; e < embed; ++e) g[e] = r.grad_query[e] * inv_b;
        });

        double batch_loss = 0.0;
        for (float l : losses) batch_loss += l;
        if (!std::isfinite(batch_loss)) throw NumericError("moco: non-finite loss, step aborted");

        Tensor grad_qraw({B, embed});
        parallel_for(B, threads, [&](std::size_t i) {
            Tensor gz({embed}), z({embed});
            for (std::size_t e = 0; e < embed; ++e) {
                gz[e] = grad_qn.at(i, e);
                z[e] = qraw.at(i, e);
            }
            Tensor g = l2_normalize_backward(gz, z);
            for (std::size_t e = 0; e < embed; ++e) grad_qraw.at(i, e) = g[e];
        });

        ParamSet grads(params.arch());
        encode_backward_batch(params, q_caches, grad_qraw, grads, threads);
        adam_step(params, grads, opt_state, optim);

        momentum_update(state.key_params, params, cfg.momentum);

        // Enqueue this batch's keys, overwriting the oldest entries.
        // queue_size is a multiple of B, so a batch never wraps mid-write.
        for (std::size_t i = 0; i < B; ++i) {
            float* dst = state.queue.row(state.ptr + i);
            const float* src = kn.row(i);
            for (std::size_t e = 0; e < embed; ++e) dst[e] = src[e];
        }
        state.ptr = (state.ptr + B) % cfg.queue_size;

        loss_acc += batch_loss;
        query_count += B;
    }
    if (query_count == 0) throw InsufficientDataError("moco: no complete batches");
    return static_cast<float>(loss_acc / static_cast<double>(query_count));
}

std::vector<PretrainRecord> pretrain(ParamSet& params, const std::vector<Segment>& dataset,
                                     Method method, const ContrastiveConfig& cfg,
                                     const OptimConfig& optim, unsigned threads,
                                     const std::function<void(int, const ParamSet&)>& on_epoch) {
    cfg.validate();
    optim.validate();
    if (method == Method::kSupervised) {
        throw ConfigError("pretrain: method must be e2e or moco");
    }
    AdamState opt_state(params);
    MocoState moco;
    if (method == Method::kMoco) moco = make_moco_state(params, cfg);

    std::vector<PretrainRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        float loss;
        if (method == Method::kE2e) {
            loss = e2e_epoch(params, opt_state, dataset, cfg, optim, epoch, threads);
        } else {
            loss = moco_epoch(params, moco, opt_state, dataset, cfg, optim, epoch, threads);
        }
        const auto end = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(end - start).count();
        records.push_back({epoch, loss, ms});
        if (on_epoch) on_epoch(epoch, params);
    }
    return records;
}

}  // namespace gaitscore
