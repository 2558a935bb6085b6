#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "pointpolicy/errors.hpp"

namespace pointpolicy::policy {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
struct NamedTensor {
    std::string name;
    Mat<T> value;
};

/// Ordered list of named dense tensors. Biases and gains are stored as column vectors.
template <typename T>
class ParameterSet {
public:
    int add(std::string name, Eigen::Index rows, Eigen::Index cols) {
        tensors_.push_back({std::move(name), Mat<T>::Zero(rows, cols)});
        return static_cast<int>(tensors_.size()) - 1;
    }

    Mat<T>& operator[](int i) { return tensors_[static_cast<std::size_t>(i)].value; }
    const Mat<T>& operator[](int i) const { return tensors_[static_cast<std::size_t>(i)].value; }

    std::size_t size() const { return tensors_.size(); }
    std::vector<NamedTensor<T>>& tensors() { return tensors_; }
    const std::vector<NamedTensor<T>>& tensors() const { return tensors_; }

    Eigen::Index element_count() const {
        Eigen::Index n = 0;
        for (const auto& t : tensors_) n += t.value.size();
        return n;
    }

    /// Same names and shapes, all zeros.
    ParameterSet zeros_like() const {
        ParameterSet out;
        for (const auto& t : tensors_) out.add(t.name, t.value.rows(), t.value.cols());
        return out;
    }

    void set_zero() {
        for (auto& t : tensors_) t.value.setZero();
    }

    bool all_finite() const {
        for (const auto& t : tensors_) {
            if (!t.value.allFinite()) return false;
        }
        return true;
    }

    template <typename U>
    ParameterSet<U> cast() const {
        ParameterSet<U> out;
        for (const auto& t : tensors_) {
            const int i = out.add(t.name, t.value.rows(), t.value.cols());
            out[i] = t.value.template cast<U>();
        }
        return out;
    }

    void check_same_layout(const ParameterSet& other) const {
        if (other.size() != size()) throw ShapeMismatch("parameter count differs");
        for (std::size_t i = 0; i < size(); ++i) {
            const auto& a = tensors_[i];
            const auto& b = other.tensors_[i];
            if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) {
                throw ShapeMismatch("parameter layout differs at " + a.name);
            }
        }
    }

    friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto& x = a.tensors_[i];
            const auto& y = b.tensors_[i];
            if (x.name != y.name || x.value.rows() != y.value.rows() || x.value.cols() != y.value.cols() ||
                x.value != y.value) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<NamedTensor<T>> tensors_;
};

template <typename T>
void fill_normal(Mat<T>& m, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(dist(rng));
    }
}

}  // namespace pointpolicy::policy
