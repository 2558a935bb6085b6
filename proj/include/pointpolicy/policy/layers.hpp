#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pointpolicy/policy/parameters.hpp"

// Column-major building blocks: activations are (features x tokens) matrices.
namespace pointpolicy::policy::layers {

/// y = w x + b
template <typename T>
void linear_forward(const Mat<T>& w, const Mat<T>& b, const Mat<T>& x, Mat<T>& y) {
    y.noalias() = w * x;
    y.colwise() += b.col(0);
}

/// Accumulates dw, db; writes dx when requested.
template <typename T>
void linear_backward(const Mat<T>& w, const Mat<T>& x, const Mat<T>& dy, Mat<T>& dw, Mat<T>& db,
                     Mat<T>* dx) {
    dw.noalias() += dy * x.transpose();
    db.col(0) += dy.rowwise().sum();
    if (dx != nullptr) dx->noalias() = w.transpose() * dy;
}

template <typename T>
inline T gelu_scalar(T x) {
    constexpr T c = T(0.7978845608028654);  // sqrt(2/pi)
    return T(0.5) * x * (T(1) + std::tanh(c * (x + T(0.044715) * x * x * x)));
}

template <typename T>
inline T gelu_grad_scalar(T x) {
    constexpr T c = T(0.7978845608028654);
    const T inner = c * (x + T(0.044715) * x * x * x);
    const T t = std::tanh(inner);
    return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3) * T(0.044715) * x * x);
}

/// Tanh-approximated GELU. `tanh_cache` keeps tanh(inner) for the backward pass.
template <typename T>
void gelu_forward(const Mat<T>& x, Mat<T>& y, Mat<T>& tanh_cache) {
    constexpr T c = T(0.7978845608028654);
    tanh_cache = (c * (x.array() + T(0.044715) * x.array().cube())).tanh().matrix();
    y = (T(0.5) * x.array() * (T(1) + tanh_cache.array())).matrix();
}

template <typename T>
void gelu_backward(const Mat<T>& x, const Mat<T>& tanh_cache, const Mat<T>& dy, Mat<T>& dx) {
    constexpr T c = T(0.7978845608028654);
    const auto t = tanh_cache.array();
    const auto xa = x.array();
    dx = (dy.array() * (T(0.5) * (T(1) + t) +
                        T(0.5) * xa * (T(1) - t.square()) * c * (T(1) + T(3) * T(0.044715) * xa.square())))
             .matrix();
}

template <typename T>
struct LayerNormCache {
    Mat<T> normalized;
    Eigen::Matrix<T, 1, Eigen::Dynamic> inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

/// Normalizes each column over its rows, then applies per-feature gain and bias.
template <typename T>
void layer_norm_forward(const Mat<T>& x, const Mat<T>& gain, const Mat<T>& bias, Mat<T>& y,
                        LayerNormCache<T>& cache) {
    const auto n = static_cast<T>(x.rows());
    const Eigen::Matrix<T, 1, Eigen::Dynamic> mean = x.colwise().sum() / n;
    cache.normalized = x.rowwise() - mean;
    const Eigen::Matrix<T, 1, Eigen::Dynamic> var = cache.normalized.colwise().squaredNorm() / n;
    cache.inv_std = (var.array() + T(kLayerNormEps)).rsqrt().matrix();
    cache.normalized = cache.normalized * cache.inv_std.asDiagonal();
    y = (cache.normalized.array().colwise() * gain.col(0).array()).matrix();
    y.colwise() += bias.col(0);
}

template <typename T>
void layer_norm_backward(const Mat<T>& gain, const LayerNormCache<T>& cache, const Mat<T>& dy,
                         Mat<T>& dgain, Mat<T>& dbias, Mat<T>& dx) {
    const auto n = static_cast<T>(dy.rows());
    dgain.col(0) += dy.cwiseProduct(cache.normalized).rowwise().sum();
    dbias.col(0) += dy.rowwise().sum();
    const Mat<T> dxhat = (dy.array().colwise() * gain.col(0).array()).matrix();
    const Eigen::Matrix<T, 1, Eigen::Dynamic> mean_d = dxhat.colwise().sum() / n;
    const Eigen::Matrix<T, 1, Eigen::Dynamic> mean_dx = dxhat.cwiseProduct(cache.normalized).colwise().sum() / n;
    dx = dxhat.rowwise() - mean_d;
    dx -= cache.normalized * mean_dx.asDiagonal();
    dx = dx * cache.inv_std.asDiagonal();
}

/// Softmax over each column (numerically stabilised).
template <typename T, typename Derived>
void softmax_columns(Eigen::MatrixBase<Derived>& s) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        auto col = s.col(j);
        const T m = col.maxCoeff();
        col = (col.array() - m).exp().matrix();
        col /= col.sum();
    }
}

/// Numerically stable log(1 + exp(x)).
template <typename T>
T softplus(T x) {
    return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
    return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace pointpolicy::policy::layers
