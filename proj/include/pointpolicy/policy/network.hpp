#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/policy/config.hpp"
#include "pointpolicy/policy/layers.hpp"
#include "pointpolicy/policy/parameters.hpp"

namespace pointpolicy::policy {

/// Normalized network input for a batch of observation windows.
template <typename T>
struct NetworkInput {
    /// (3H) x (B * point tokens); column b * Np + k holds the flattened history of keypoint k, oldest first.
    Mat<T> points;
    /// B entries, +1 for a closed gripper and -1 for open.
    Eigen::Matrix<T, Eigen::Dynamic, 1> gripper;

    Eigen::Index batch() const { return gripper.size(); }
};

template <typename T>
struct NetworkOutput {
    /// (3L) x (B * N_r); row 3l + c is coordinate c of future step l.
    Mat<T> tracks;
    /// L x B gripper logits.
    Mat<T> gripper_logits;
};

/// Token-based track predictor.
///
/// Every keypoint history goes through a shared two-layer MLP encoder, the current gripper state
/// becomes an extra token, learned positional embeddings tag token identity, and a stack of
/// pre-norm transformer blocks with full (non-causal) attention mixes the tokens. Robot tokens feed
/// an MLP head that predicts each point's future track as an offset from its latest position;
/// the gripper token feeds an MLP head that predicts one logit per future step.
template <typename T>
class TrackTransformer {
public:
    struct Linear {
        int w = -1;
        int b = -1;
    };
    struct Norm {
        int gain = -1;
        int bias = -1;
    };
    struct Block {
        Norm ln1;
        Linear qkv;
        Linear proj;
        Norm ln2;
        Linear fc1;
        Linear fc2;
    };

    explicit TrackTransformer(const PolicyConfig& config) : config_(config) {
        config_.validate();
        const int d = config_.hidden;
        const int in = 3 * config_.history;
        auto linear = [&](const std::string& name, int out_dim, int in_dim) {
            Linear l;
            l.w = layout_.add(name + ".weight", out_dim, in_dim);
            l.b = layout_.add(name + ".bias", out_dim, 1);
            return l;
        };
        auto norm = [&](const std::string& name) {
            Norm n;
            n.gain = layout_.add(name + ".gain", d, 1);
            n.bias = layout_.add(name + ".bias", d, 1);
            return n;
        };
        enc1_ = linear("encoder.fc1", d, in);
        enc2_ = linear("encoder.fc2", d, d);
        grip_embed_ = linear("gripper_embed", d, 1);
        pos_ = layout_.add("pos_embed", d, config_.num_tokens());
        for (int i = 0; i < config_.layers; ++i) {
            const std::string p = "blocks." + std::to_string(i);
            Block b;
            b.ln1 = norm(p + ".ln1");
            b.qkv = linear(p + ".attn.qkv", 3 * d, d);
            b.proj = linear(p + ".attn.proj", d, d);
            b.ln2 = norm(p + ".ln2");
            b.fc1 = linear(p + ".mlp.fc1", config_.mlp_ratio * d, d);
            b.fc2 = linear(p + ".mlp.fc2", d, config_.mlp_ratio * d);
            blocks_.push_back(b);
        }
        final_norm_ = norm("ln_f");
        track1_ = linear("track_head.fc1", d, d);
        track2_ = linear("track_head.fc2", 3 * config_.chunk, d);
        grip1_ = linear("gripper_head.fc1", d, d);
        grip2_ = linear("gripper_head.fc2", config_.chunk, d);
    }

    const PolicyConfig& config() const { return config_; }

    /// Zero-valued parameter set with this network's names and shapes.
    ParameterSet<T> make_parameters() const { return layout_.zeros_like(); }

    /// GPT-style initialisation: N(0, 0.02) weights, residual projections scaled by 1/sqrt(2 * layers),
    /// zero biases, unit norm gains.
    ParameterSet<T> initialize(std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        ParameterSet<T> p = make_parameters();
        const double residual_std = 0.02 / std::sqrt(2.0 * std::max(1, config_.layers));
        for (auto& t : p.tensors()) {
            const std::string& n = t.name;
            const bool is_bias = n.ends_with(".bias");
            const bool is_gain = n.ends_with(".gain");
            if (is_gain) {
                t.value.setOnes();
            } else if (is_bias) {
                t.value.setZero();
            } else if (n.ends_with("attn.proj.weight") || n.ends_with("mlp.fc2.weight")) {
                fill_normal(t.value, residual_std, rng);
            } else {
                fill_normal(t.value, 0.02, rng);
            }
        }
        return p;
    }

    void check_parameters(const ParameterSet<T>& p) const { layout_.check_same_layout(p); }

    /// Point-encoder output for (3H) x n flattened histories.
    Mat<T> encode(const ParameterSet<T>& p, const Mat<T>& histories) const {
        if (histories.rows() != 3 * config_.history) throw ShapeMismatch("history width mismatch");
        Mat<T> pre, act, tanh_cache, out;
        layers::linear_forward(p[enc1_.w], p[enc1_.b], histories, pre);
        layers::gelu_forward(pre, act, tanh_cache);
        layers::linear_forward(p[enc2_.w], p[enc2_.b], act, out);
        return out;
    }

    struct BlockCache {
        layers::LayerNormCache<T> ln1;
        Mat<T> h1;
        Mat<T> qkv;
        Mat<T> probs;  // Ntok x (B * heads * Ntok)
        Mat<T> attn;
        layers::LayerNormCache<T> ln2;
        Mat<T> h2;
        Mat<T> pre_act;
        Mat<T> act;
        Mat<T> act_tanh;
    };

    struct Cache {
        Eigen::Index batch = 0;
        Mat<T> input;
        Eigen::Matrix<T, Eigen::Dynamic, 1> gripper;
        Mat<T> enc_pre;
        Mat<T> enc_act;
        Mat<T> enc_tanh;
        std::vector<BlockCache> blocks;
        Mat<T> trunk_out;
        layers::LayerNormCache<T> lnf;
        Mat<T> robot_tokens;
        Mat<T> track_pre;
        Mat<T> track_act;
        Mat<T> track_tanh;
        Mat<T> grip_tokens;
        Mat<T> grip_pre;
        Mat<T> grip_act;
        Mat<T> grip_tanh;
    };

    NetworkOutput<T> forward(const ParameterSet<T>& p, const NetworkInput<T>& x, Cache* cache = nullptr) const {
        Cache local;
        Cache& c = cache != nullptr ? *cache : local;
        const int d = config_.hidden;
        const int np = config_.num_point_tokens();
        const int nr = config_.num_robot_points;
        const int nt = config_.num_tokens();
        const Eigen::Index b = x.batch();
        if (x.points.rows() != 3 * config_.history || x.points.cols() != b * np) {
            throw ShapeMismatch("network input has shape " + std::to_string(x.points.rows()) + "x" +
                                std::to_string(x.points.cols()));
        }
        c.batch = b;
        c.input = x.points;
        c.gripper = x.gripper;

        layers::linear_forward(p[enc1_.w], p[enc1_.b], x.points, c.enc_pre);
        layers::gelu_forward(c.enc_pre, c.enc_act, c.enc_tanh);
        Mat<T> encoded;
        layers::linear_forward(p[enc2_.w], p[enc2_.b], c.enc_act, encoded);

        Mat<T> tokens(d, b * nt);
        for (Eigen::Index s = 0; s < b; ++s) {
            tokens.middleCols(s * nt, np) = encoded.middleCols(s * np, np);
            tokens.col(s * nt + np) = p[grip_embed_.w].col(0) * x.gripper(s) + p[grip_embed_.b].col(0);
            tokens.middleCols(s * nt, nt) += p[pos_];
        }

        c.blocks.resize(blocks_.size());
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            block_forward(p, blocks_[i], tokens, c.blocks[i]);
        }
        c.trunk_out = tokens;
        Mat<T> normed;
        layers::layer_norm_forward(tokens, p[final_norm_.gain], p[final_norm_.bias], normed, c.lnf);

        c.robot_tokens.resize(d, b * nr);
        c.grip_tokens.resize(d, b);
        for (Eigen::Index s = 0; s < b; ++s) {
            c.robot_tokens.middleCols(s * nr, nr) = normed.middleCols(s * nt, nr);
            c.grip_tokens.col(s) = normed.col(s * nt + np);
        }

        NetworkOutput<T> out;
        layers::linear_forward(p[track1_.w], p[track1_.b], c.robot_tokens, c.track_pre);
        layers::gelu_forward(c.track_pre, c.track_act, c.track_tanh);
        layers::linear_forward(p[track2_.w], p[track2_.b], c.track_act, out.tracks);
        const Eigen::Index last = 3 * (config_.history - 1);
        for (Eigen::Index s = 0; s < b; ++s) {
            for (int k = 0; k < nr; ++k) {
                const auto current = x.points.col(s * np + k).template segment<3>(last);
                for (int l = 0; l < config_.chunk; ++l) {
                    out.tracks.col(s * nr + k).template segment<3>(3 * l) += current;
                }
            }
        }

        layers::linear_forward(p[grip1_.w], p[grip1_.b], c.grip_tokens, c.grip_pre);
        layers::gelu_forward(c.grip_pre, c.grip_act, c.grip_tanh);
        layers::linear_forward(p[grip2_.w], p[grip2_.b], c.grip_act, out.gripper_logits);
        return out;
    }

    /// Accumulates parameter gradients of a scalar loss given its gradients w.r.t. the outputs.
    void backward(const ParameterSet<T>& p, const Cache& c, const Mat<T>& d_tracks, const Mat<T>& d_logits,
                  ParameterSet<T>& g) const {
        const int d = config_.hidden;
        const int np = config_.num_point_tokens();
        const int nr = config_.num_robot_points;
        const int nt = config_.num_tokens();
        const Eigen::Index b = c.batch;

        Mat<T> tmp;
        Mat<T> d_act;
        Mat<T> d_pre;

        // Heads. The residual base comes from the input, which has no parameters.
        layers::linear_backward(p[track2_.w], c.track_act, d_tracks, g[track2_.w], g[track2_.b], &d_act);
        layers::gelu_backward(c.track_pre, c.track_tanh, d_act, d_pre);
        Mat<T> d_robot;
        layers::linear_backward(p[track1_.w], c.robot_tokens, d_pre, g[track1_.w], g[track1_.b], &d_robot);

        layers::linear_backward(p[grip2_.w], c.grip_act, d_logits, g[grip2_.w], g[grip2_.b], &d_act);
        layers::gelu_backward(c.grip_pre, c.grip_tanh, d_act, d_pre);
        Mat<T> d_grip;
        layers::linear_backward(p[grip1_.w], c.grip_tokens, d_pre, g[grip1_.w], g[grip1_.b], &d_grip);

        Mat<T> d_normed = Mat<T>::Zero(d, b * nt);
        for (Eigen::Index s = 0; s < b; ++s) {
            d_normed.middleCols(s * nt, nr) = d_robot.middleCols(s * nr, nr);
            d_normed.col(s * nt + np) = d_grip.col(s);
        }
        Mat<T> d_tokens;
        layers::layer_norm_backward(p[final_norm_.gain], c.lnf, d_normed, g[final_norm_.gain], g[final_norm_.bias],
                                    d_tokens);

        for (std::size_t i = blocks_.size(); i-- > 0;) {
            block_backward(p, blocks_[i], c.blocks[i], d_tokens, g);
        }

        Mat<T> d_encoded(d, b * np);
        for (Eigen::Index s = 0; s < b; ++s) {
            g[pos_] += d_tokens.middleCols(s * nt, nt);
            d_encoded.middleCols(s * np, np) = d_tokens.middleCols(s * nt, np);
            g[grip_embed_.w].col(0) += d_tokens.col(s * nt + np) * c.gripper(s);
            g[grip_embed_.b].col(0) += d_tokens.col(s * nt + np);
        }
        layers::linear_backward(p[enc2_.w], c.enc_act, d_encoded, g[enc2_.w], g[enc2_.b], &d_act);
        layers::gelu_backward(c.enc_pre, c.enc_tanh, d_act, d_pre);
        layers::linear_backward<T>(p[enc1_.w], c.input, d_pre, g[enc1_.w], g[enc1_.b], nullptr);
    }

private:
    void block_forward(const ParameterSet<T>& p, const Block& blk, Mat<T>& x, BlockCache& c) const {
        const int d = config_.hidden;
        const int nt = config_.num_tokens();
        const int heads = config_.heads;
        const int dh = d / heads;
        const Eigen::Index b = x.cols() / nt;
        const T scale = T(1) / std::sqrt(static_cast<T>(dh));

        layers::layer_norm_forward(x, p[blk.ln1.gain], p[blk.ln1.bias], c.h1, c.ln1);
        layers::linear_forward(p[blk.qkv.w], p[blk.qkv.b], c.h1, c.qkv);

        c.probs.resize(nt, b * heads * nt);
        c.attn.resize(d, b * nt);
        for (Eigen::Index s = 0; s < b; ++s) {
            for (int h = 0; h < heads; ++h) {
                const auto q = c.qkv.block(h * dh, s * nt, dh, nt);
                const auto k = c.qkv.block(d + h * dh, s * nt, dh, nt);
                const auto v = c.qkv.block(2 * d + h * dh, s * nt, dh, nt);
                auto a = c.probs.middleCols((s * heads + h) * nt, nt);
                a.noalias() = scale * (k.transpose() * q);
                layers::softmax_columns<T>(a);
                c.attn.block(h * dh, s * nt, dh, nt).noalias() = v * a;
            }
        }
        Mat<T> projected;
        layers::linear_forward(p[blk.proj.w], p[blk.proj.b], c.attn, projected);
        x += projected;

        layers::layer_norm_forward(x, p[blk.ln2.gain], p[blk.ln2.bias], c.h2, c.ln2);
        layers::linear_forward(p[blk.fc1.w], p[blk.fc1.b], c.h2, c.pre_act);
        layers::gelu_forward(c.pre_act, c.act, c.act_tanh);
        Mat<T> mlp_out;
        layers::linear_forward(p[blk.fc2.w], p[blk.fc2.b], c.act, mlp_out);
        x += mlp_out;
    }

    /// dx holds the gradient w.r.t. the block output on entry and w.r.t. its input on exit.
    void block_backward(const ParameterSet<T>& p, const Block& blk, const BlockCache& c, Mat<T>& dx,
                        ParameterSet<T>& g) const {
        const int d = config_.hidden;
        const int nt = config_.num_tokens();
        const int heads = config_.heads;
        const int dh = d / heads;
        const Eigen::Index b = dx.cols() / nt;
        const T scale = T(1) / std::sqrt(static_cast<T>(dh));

        Mat<T> d_act;
        layers::linear_backward(p[blk.fc2.w], c.act, dx, g[blk.fc2.w], g[blk.fc2.b], &d_act);
        Mat<T> d_pre;
        layers::gelu_backward(c.pre_act, c.act_tanh, d_act, d_pre);
        Mat<T> d_h2;
        layers::linear_backward(p[blk.fc1.w], c.h2, d_pre, g[blk.fc1.w], g[blk.fc1.b], &d_h2);
        Mat<T> d_mid;
        layers::layer_norm_backward(p[blk.ln2.gain], c.ln2, d_h2, g[blk.ln2.gain], g[blk.ln2.bias], d_mid);
        dx += d_mid;

        Mat<T> d_attn;
        layers::linear_backward(p[blk.proj.w], c.attn, dx, g[blk.proj.w], g[blk.proj.b], &d_attn);

        Mat<T> d_qkv(3 * d, b * nt);
        Mat<T> d_probs(nt, nt);
        Mat<T> d_scores(nt, nt);
        for (Eigen::Index s = 0; s < b; ++s) {
            for (int h = 0; h < heads; ++h) {
                const auto q = c.qkv.block(h * dh, s * nt, dh, nt);
                const auto k = c.qkv.block(d + h * dh, s * nt, dh, nt);
                const auto v = c.qkv.block(2 * d + h * dh, s * nt, dh, nt);
                const auto a = c.probs.middleCols((s * heads + h) * nt, nt);
                const auto d_out = d_attn.block(h * dh, s * nt, dh, nt);

                d_qkv.block(2 * d + h * dh, s * nt, dh, nt).noalias() = d_out * a.transpose();
                d_probs.noalias() = v.transpose() * d_out;
                for (int j = 0; j < nt; ++j) {
                    const T dot = a.col(j).dot(d_probs.col(j));
                    d_scores.col(j) = a.col(j).cwiseProduct((d_probs.col(j).array() - dot).matrix());
                }
                d_qkv.block(h * dh, s * nt, dh, nt).noalias() = scale * (k * d_scores);
                d_qkv.block(d + h * dh, s * nt, dh, nt).noalias() = scale * (q * d_scores.transpose());
            }
        }
        Mat<T> d_h1;
        layers::linear_backward(p[blk.qkv.w], c.h1, d_qkv, g[blk.qkv.w], g[blk.qkv.b], &d_h1);
        Mat<T> d_in;
        layers::layer_norm_backward(p[blk.ln1.gain], c.ln1, d_h1, g[blk.ln1.gain], g[blk.ln1.bias], d_in);
        dx += d_in;
    }

    PolicyConfig config_;
    ParameterSet<T> layout_;
    Linear enc1_, enc2_, grip_embed_;
    int pos_ = -1;
    std::vector<Block> blocks_;
    Norm final_norm_;
    Linear track1_, track2_, grip1_, grip2_;
};

}  // namespace pointpolicy::policy
