#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace longsiam {

/// Ordered list of positive extents. Element counts are checked against
/// overflow so downstream buffers can always be allocated from count().
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<int64_t> dims) : dims_(dims) { validate(); }
    explicit Shape(std::vector<int64_t> dims) : dims_(std::move(dims)) { validate(); }

    int64_t rank() const { return static_cast<int64_t>(dims_.size()); }
    int64_t operator[](int64_t i) const { return dims_[static_cast<size_t>(i)]; }
    const std::vector<int64_t>& dims() const { return dims_; }

    /// Total element count (product of extents); throws on overflow.
    int64_t count() const {
        int64_t n = 1;
        for (int64_t d : dims_) {
            if (d > std::numeric_limits<int64_t>::max() / n)
                throw std::overflow_error("Shape::count overflows");
            n *= d;
        }
        return n;
    }

    bool operator==(const Shape& other) const = default;

    std::string str() const {
        std::ostringstream os;
        os << '[';
        for (size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
        os << ']';
        return os.str();
    }

private:
    void validate() const {
        for (int64_t d : dims_)
            if (d < 1) throw std::invalid_argument("Shape extents must be >= 1, got " + str());
        count();  // reject overflowing shapes at construction
    }

    std::vector<int64_t> dims_;
};

/// Dense N-dimensional array, row-major flat storage.
///
/// Values are plain and copyable; treat constructed tensors as immutable
/// when sharing across threads. T is float for training runs and double
/// for the finite-difference suites.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<int64_t>(data_.size()) != shape_.count())
            throw std::invalid_argument("Tensor data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_.str());
    }

    static Tensor zeros(const Shape& shape) {
        return Tensor(shape, std::vector<T>(static_cast<size_t>(shape.count()), T(0)));
    }

    static Tensor full(const Shape& shape, T value) {
        return Tensor(shape, std::vector<T>(static_cast<size_t>(shape.count()), value));
    }

    const Shape& shape() const { return shape_; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    T* begin() { return data_.data(); }
    T* end() { return data_.data() + data_.size(); }
    const T* begin() const { return data_.data(); }
    const T* end() const { return data_.data() + data_.size(); }

    /// Multi-index accessor; index length must equal rank.
    T& at(std::initializer_list<int64_t> idx) { return data_[flat_index(idx)]; }
    const T& at(std::initializer_list<int64_t> idx) const { return data_[flat_index(idx)]; }

    bool operator==(const Tensor& other) const = default;

private:
    size_t flat_index(std::initializer_list<int64_t> idx) const {
        if (static_cast<int64_t>(idx.size()) != shape_.rank())
            throw std::invalid_argument("index rank mismatch");
        int64_t flat = 0;
        int64_t axis = 0;
        for (int64_t i : idx) {
            if (i < 0 || i >= shape_[axis]) throw std::out_of_range("index out of range");
            flat = flat * shape_[axis] + i;
            ++axis;
        }
        return static_cast<size_t>(flat);
    }

    Shape shape_;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

enum class EwOp { Add, Sub, Mul };

template <typename T>
Tensor<T> elementwise(EwOp op, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("elementwise: shape mismatch " + a.shape().str() + " vs " +
                                    b.shape().str());
    Tensor<T> out = a;
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.size();
    switch (op) {
        case EwOp::Add: for (int64_t i = 0; i < n; ++i) po[i] += pb[i]; break;
        case EwOp::Sub: for (int64_t i = 0; i < n; ++i) po[i] -= pb[i]; break;
        case EwOp::Mul: for (int64_t i = 0; i < n; ++i) po[i] *= pb[i]; break;
    }
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(EwOp::Add, a, b); }
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(EwOp::Sub, a, b); }
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(EwOp::Mul, a, b); }

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
    Tensor<T> out = a;
    for (T& v : out) v = -v;
    return out;
}

/// Standard matrix product for rank-2 tensors.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape().rank() != 2 || b.shape().rank() != 2)
        throw std::invalid_argument("matmul: rank-2 tensors required");
    const int64_t m = a.shape()[0], k = a.shape()[1];
    const int64_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw std::invalid_argument("matmul: inner extents disagree, " + a.shape().str() + " vs " +
                                    b.shape().str());
    Tensor<T> out = Tensor<T>::zeros(Shape{m, n});
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t p = 0; p < k; ++p) {
            const T av = pa[i * k + p];
            const T* brow = pb + p * n;
            T* orow = po + i * n;
            for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

namespace detail {

inline std::vector<int64_t> check_axes(const Shape& shape, const std::vector<int64_t>& axes) {
    std::vector<bool> seen(static_cast<size_t>(shape.rank()), false);
    for (int64_t ax : axes) {
        if (ax < 0 || ax >= shape.rank())
            throw std::invalid_argument("reduce: invalid axis " + std::to_string(ax) + " for " +
                                        shape.str());
        if (seen[static_cast<size_t>(ax)])
            throw std::invalid_argument("reduce: duplicate axis " + std::to_string(ax));
        seen[static_cast<size_t>(ax)] = true;
    }
    std::vector<int64_t> kept;
    for (int64_t i = 0; i < shape.rank(); ++i)
        if (!seen[static_cast<size_t>(i)]) kept.push_back(i);
    return kept;
}

// Decomposes each flat index into (kept-axes index, reduced-axes index), both
// row-major over their own axis lists. Used by every reduction below.
template <typename T, typename Fn>
void for_each_reduced(const Tensor<T>& t, const std::vector<int64_t>& axes, Fn&& fn) {
    const Shape& s = t.shape();
    std::vector<int64_t> kept = check_axes(s, axes);
    std::vector<bool> reduced(static_cast<size_t>(s.rank()), true);
    for (int64_t ax : kept) reduced[static_cast<size_t>(ax)] = false;

    const int64_t rank = s.rank();
    std::vector<int64_t> idx(static_cast<size_t>(rank), 0);
    const int64_t n = t.size();
    for (int64_t flat = 0; flat < n; ++flat) {
        int64_t out_idx = 0, red_idx = 0;
        for (int64_t ax = 0; ax < rank; ++ax) {
            if (reduced[static_cast<size_t>(ax)]) red_idx = red_idx * s[ax] + idx[static_cast<size_t>(ax)];
            else out_idx = out_idx * s[ax] + idx[static_cast<size_t>(ax)];
        }
        fn(flat, out_idx, red_idx);
        for (int64_t ax = rank - 1; ax >= 0; --ax) {
            if (++idx[static_cast<size_t>(ax)] < s[ax]) break;
            idx[static_cast<size_t>(ax)] = 0;
        }
    }
}

template <typename T>
Shape reduced_shape(const Tensor<T>& t, const std::vector<int64_t>& axes) {
    std::vector<int64_t> kept = check_axes(t.shape(), axes);
    std::vector<int64_t> dims;
    for (int64_t ax : kept) dims.push_back(t.shape()[ax]);
    if (dims.empty()) dims.push_back(1);  // full reduction yields a scalar tensor
    return Shape(dims);
}

}  // namespace detail

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& t, const std::vector<int64_t>& axes) {
    Tensor<T> out = Tensor<T>::zeros(detail::reduced_shape(t, axes));
    detail::for_each_reduced(t, axes, [&](int64_t flat, int64_t out_idx, int64_t) {
        out[out_idx] += t[flat];
    });
    return out;
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& t, const std::vector<int64_t>& axes) {
    int64_t m = 1;
    for (int64_t ax : axes) m *= t.shape()[ax];
    Tensor<T> out = reduce_sum(t, axes);
    for (T& v : out) v /= static_cast<T>(m);
    return out;
}

template <typename T>
Tensor<T> reduce_max(const Tensor<T>& t, const std::vector<int64_t>& axes) {
    Tensor<T> out = Tensor<T>::full(detail::reduced_shape(t, axes),
                                    -std::numeric_limits<T>::infinity());
    detail::for_each_reduced(t, axes, [&](int64_t flat, int64_t out_idx, int64_t) {
        if (t[flat] > out[out_idx]) out[out_idx] = t[flat];
    });
    return out;
}

/// Index of the maximum within the reduced axes (row-major over those axes);
/// ties break toward the lowest index.
template <typename T>
Tensor<int64_t> argmax(const Tensor<T>& t, const std::vector<int64_t>& axes) {
    Shape out_shape = detail::reduced_shape(t, axes);
    Tensor<int64_t> out = Tensor<int64_t>::zeros(out_shape);
    Tensor<T> best = Tensor<T>::full(out_shape, -std::numeric_limits<T>::infinity());
    detail::for_each_reduced(t, axes, [&](int64_t flat, int64_t out_idx, int64_t red_idx) {
        if (t[flat] > best[out_idx]) {
            best[out_idx] = t[flat];
            out[out_idx] = red_idx;
        }
    });
    return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& t, const Shape& new_shape) {
    if (new_shape.count() != t.size())
        throw std::invalid_argument("reshape: element count mismatch, " + t.shape().str() +
                                    " -> " + new_shape.str());
    return Tensor<T>(new_shape, std::vector<T>(t.begin(), t.end()));
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (const T& v : t)
        if (!std::isfinite(v)) return false;
    return true;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw std::invalid_argument("max_abs_diff: shape mismatch");
    T worst = 0;
    for (int64_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace longsiam
