#pragma once

// Core grid types: scalar fields, strictly positive images, staggered drift
// fields on interior half-edges, edge masks, mosaic frame layouts and the
// 5-point stencil operator.
//
// Conventions used throughout:
//   * pixel (i, j): i = column (x direction), j = row (y direction),
//     stored row-major at data[j*width + i]
//   * d1 lives on edges between (i,j) and (i+1,j), shape (width-1) x height
//   * d2 lives on edges between (i,j) and (i,j+1), shape width x (height-1)
//   * boundary half-edges are not stored and act as zero drift + zero flux

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace osmosis {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class LayoutError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Compensated (Kahan) summation; keeps grid-wide sums accurate enough that
// conservation checks at 1e-10 are not polluted by the accumulator itself.
inline double kahan_sum(const double* x, std::size_t n) {
    double s = 0.0, c = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double y = x[k] - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

// Runs fn(begin, end) over [0, n) split into contiguous chunks. Chunks have
// disjoint output ranges, so results are identical for any thread count.
template <class Fn>
void parallel_chunks(int n, int threads, Fn&& fn) {
    if (n <= 0) return;
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    int chunk = (n + threads - 1) / threads;
    for (int t = 1; t < threads; ++t) {
        int b = t * chunk;
        int e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(0, std::min(n, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Plain real-valued field on a regular width x height grid. No sign
// constraint; evolution states, right-hand sides and reflectance maps all
// live here.
class Field {
public:
    Field() = default;

    Field(int width, int height, double value = 0.0)
        : width_(width), height_(height),
          data_(checked_size(width, height), value) {}

    static Field from_data(int width, int height, std::vector<double> data) {
        if (data.size() != checked_size(width, height))
            throw ShapeError("Field::from_data: data length " +
                             std::to_string(data.size()) + " != " +
                             std::to_string(width) + "x" + std::to_string(height));
        Field f;
        f.width_ = width;
        f.height_ = height;
        f.data_ = std::move(data);
        return f;
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(j) * width_ + i]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(j) * width_ + i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(int j) { return data_.data() + static_cast<std::size_t>(j) * width_; }
    const double* row(int j) const { return data_.data() + static_cast<std::size_t>(j) * width_; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Field& o) const { return width_ == o.width_ && height_ == o.height_; }

    double sum() const { return detail::kahan_sum(data_.data(), data_.size()); }
    double mean() const { return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size()); }
    double min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }
    double max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    static std::size_t checked_size(int width, int height) {
        if (width < 1 || height < 1)
            throw ShapeError("Field: width and height must be >= 1, got " +
                             std::to_string(width) + "x" + std::to_string(height));
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

inline double l2_norm(const Field& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

inline double l2_distance(const Field& a, const Field& b) {
    if (!a.same_shape(b)) throw ShapeError("l2_distance: shape mismatch");
    double s = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t k = 0; k < a.size(); ++k) {
        double d = pa[k] - pb[k];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double max_abs_diff(const Field& a, const Field& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    return m;
}

// Strictly positive scalar image with grid spacing h. eps_min is the
// positivity floor the data is guaranteed to sit above (for images produced
// by the I/O lift this is the lift value eps0).
class PositiveImage {
public:
    explicit PositiveImage(Field field, double h = 1.0,
                           std::optional<double> eps_min = std::nullopt)
        : field_(std::move(field)), h_(h) {
        if (!(h_ > 0.0) || !std::isfinite(h_))
            throw ShapeError("PositiveImage: grid spacing h must be finite and > 0");
        double lo = std::numeric_limits<double>::infinity();
        for (double v : field_.values()) {
            if (!std::isfinite(v) || v <= 0.0)
                throw ShapeError("PositiveImage: entries must be finite and > 0, got " +
                                 std::to_string(v));
            lo = std::min(lo, v);
        }
        if (eps_min) {
            if (!(*eps_min > 0.0))
                throw ShapeError("PositiveImage: eps_min must be > 0");
            if (lo < *eps_min)
                throw ShapeError("PositiveImage: entry " + std::to_string(lo) +
                                 " below declared eps_min " + std::to_string(*eps_min));
            eps_min_ = *eps_min;
        } else {
            eps_min_ = lo;
        }
    }

    const Field& field() const { return field_; }
    int width() const { return field_.width(); }
    int height() const { return field_.height(); }
    double h() const { return h_; }
    double eps_min() const { return eps_min_; }
    double operator()(int i, int j) const { return field_(i, j); }

private:
    Field field_;
    double h_ = 1.0;
    double eps_min_ = 0.0;
};

// Staggered drift field on interior half-edges. Carries the grid spacing of
// the image it was built for; boundary edges are implicitly zero.
class DriftField {
public:
    DriftField(int width, int height, double h = 1.0)
        : width_(width), height_(height), h_(h),
          d1_(edge_count1(width, height), 0.0),
          d2_(edge_count2(width, height), 0.0) {
        if (!(h_ > 0.0) || !std::isfinite(h_))
            throw ShapeError("DriftField: grid spacing h must be finite and > 0");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double h() const { return h_; }

    // horizontal edge between (i,j) and (i+1,j); 0 <= i < width-1
    double& d1(int i, int j) { return d1_[static_cast<std::size_t>(j) * (width_ - 1) + i]; }
    double d1(int i, int j) const { return d1_[static_cast<std::size_t>(j) * (width_ - 1) + i]; }
    // vertical edge between (i,j) and (i,j+1); 0 <= j < height-1
    double& d2(int i, int j) { return d2_[static_cast<std::size_t>(j) * width_ + i]; }
    double d2(int i, int j) const { return d2_[static_cast<std::size_t>(j) * width_ + i]; }

    std::size_t count1() const { return d1_.size(); }
    std::size_t count2() const { return d2_.size(); }

    bool shape_matches(int width, int height) const { return width_ == width && height_ == height; }

    bool all_finite() const {
        for (double v : d1_)
            if (!std::isfinite(v)) return false;
        for (double v : d2_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : d1_) m = std::max(m, std::abs(v));
        for (double v : d2_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    static std::size_t edge_count1(int w, int h) {
        if (w < 1 || h < 1) throw ShapeError("DriftField: width and height must be >= 1");
        return static_cast<std::size_t>(w - 1) * h;
    }
    static std::size_t edge_count2(int w, int h) {
        return static_cast<std::size_t>(w) * (h - 1);
    }

    int width_ = 0, height_ = 0;
    double h_ = 1.0;
    std::vector<double> d1_, d2_;
};

// Boolean mask over the same half-edge layout as DriftField; true = force
// the drift across this edge to zero.
class EdgeMask {
public:
    EdgeMask(int width, int height)
        : width_(width), height_(height),
          m1_(size1(width, height), 0), m2_(size2(width, height), 0) {}

    int width() const { return width_; }
    int height() const { return height_; }

    void set1(int i, int j, bool v) { m1_[static_cast<std::size_t>(j) * (width_ - 1) + i] = v; }
    void set2(int i, int j, bool v) { m2_[static_cast<std::size_t>(j) * width_ + i] = v; }
    bool m1(int i, int j) const { return m1_[static_cast<std::size_t>(j) * (width_ - 1) + i] != 0; }
    bool m2(int i, int j) const { return m2_[static_cast<std::size_t>(j) * width_ + i] != 0; }

    bool shape_matches(const DriftField& d) const {
        return width_ == d.width() && height_ == d.height();
    }
    bool shape_matches(int width, int height) const { return width_ == width && height_ == height; }

    std::size_t count_set() const {
        std::size_t n = 0;
        for (auto v : m1_) n += v != 0;
        for (auto v : m2_) n += v != 0;
        return n;
    }

private:
    static std::size_t size1(int w, int h) {
        if (w < 1 || h < 1) throw ShapeError("EdgeMask: width and height must be >= 1");
        return static_cast<std::size_t>(w - 1) * h;
    }
    static std::size_t size2(int w, int h) { return static_cast<std::size_t>(w) * (h - 1); }

    int width_ = 0, height_ = 0;
    std::vector<std::uint8_t> m1_, m2_;
};

// Axis-aligned frame rectangle in mosaic pixel coordinates.
struct FrameRect {
    std::string id;
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
};

class FrameLayout {
public:
    FrameLayout() = default;
    explicit FrameLayout(std::vector<FrameRect> frames) : frames_(std::move(frames)) {}

    void add(FrameRect r) { frames_.push_back(std::move(r)); }
    const std::vector<FrameRect>& frames() const { return frames_; }
    std::size_t size() const { return frames_.size(); }

private:
    std::vector<FrameRect> frames_;
};

// Maps every pixel to the index of the frame owning it. Throws LayoutError
// unless the rectangles partition the canvas exactly (no overlap, no gap).
inline std::vector<int> frame_index_map(const FrameLayout& layout, int width, int height) {
    if (width < 1 || height < 1)
        throw LayoutError("frame_index_map: canvas must be at least 1x1");
    std::vector<int> map(static_cast<std::size_t>(width) * height, -1);
    const auto& frames = layout.frames();
    for (std::size_t fi = 0; fi < frames.size(); ++fi) {
        const FrameRect& r = frames[fi];
        if (r.width < 1 || r.height < 1)
            throw LayoutError("layout: frame '" + r.id + "' has empty extent");
        if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.width > width || r.y0 + r.height > height)
            throw LayoutError("layout: frame '" + r.id + "' exceeds the " +
                              std::to_string(width) + "x" + std::to_string(height) + " canvas");
        for (int j = r.y0; j < r.y0 + r.height; ++j) {
            for (int i = r.x0; i < r.x0 + r.width; ++i) {
                int& cell = map[static_cast<std::size_t>(j) * width + i];
                if (cell != -1)
                    throw LayoutError("layout: frames '" + frames[cell].id + "' and '" +
                                      r.id + "' overlap at pixel (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
                cell = static_cast<int>(fi);
            }
        }
    }
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i)
            if (map[static_cast<std::size_t>(j) * width + i] == -1)
                throw LayoutError("layout: pixel (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") is not covered by any frame");
    return map;
}

inline void validate_layout(const FrameLayout& layout, int width, int height) {
    (void)frame_index_map(layout, width, height);
}

enum class StencilKind { full, horizontal, vertical };

// Discrete osmosis operator stored as per-pixel edge weights. Row p of the
// matrix reads
//   (A u)_p = wC*u(i,j) + wE*u(i+1,j) + wW*u(i-1,j) + wS*u(i,j+1) + wN*u(i,j-1)
// with weights of absent (boundary) neighbours identically zero. Horizontal
// variants only populate wE/wW, vertical ones only wS/wN; diagonal entries
// carry only the contributions of the stored direction so that the split
// parts sum to the full operator.
class StencilOperator {
public:
    StencilOperator(int width, int height, double h, StencilKind kind)
        : width_(width), height_(height), h_(h), kind_(kind),
          wC_(checked_size(width, height), 0.0), wE_(wC_.size(), 0.0),
          wW_(wC_.size(), 0.0), wN_(wC_.size(), 0.0), wS_(wC_.size(), 0.0) {
        if (!(h_ > 0.0) || !std::isfinite(h_))
            throw ShapeError("StencilOperator: grid spacing h must be finite and > 0");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double h() const { return h_; }
    StencilKind kind() const { return kind_; }

    double& wC(int i, int j) { return wC_[pix(i, j)]; }
    double& wE(int i, int j) { return wE_[pix(i, j)]; }
    double& wW(int i, int j) { return wW_[pix(i, j)]; }
    double& wN(int i, int j) { return wN_[pix(i, j)]; }
    double& wS(int i, int j) { return wS_[pix(i, j)]; }
    double wC(int i, int j) const { return wC_[pix(i, j)]; }
    double wE(int i, int j) const { return wE_[pix(i, j)]; }
    double wW(int i, int j) const { return wW_[pix(i, j)]; }
    double wN(int i, int j) const { return wN_[pix(i, j)]; }
    double wS(int i, int j) const { return wS_[pix(i, j)]; }

    // out = A u
    void apply(const Field& u, Field& out) const {
        require_shape(u);
        if (!out.same_shape(u)) out = Field(width_, height_);
        for (int j = 0; j < height_; ++j) {
            for (int i = 0; i < width_; ++i) {
                std::size_t p = pix(i, j);
                double s = wC_[p] * u(i, j);
                if (i + 1 < width_) s += wE_[p] * u(i + 1, j);
                if (i > 0) s += wW_[p] * u(i - 1, j);
                if (j + 1 < height_) s += wS_[p] * u(i, j + 1);
                if (j > 0) s += wN_[p] * u(i, j - 1);
                out(i, j) = s;
            }
        }
    }

    Field apply(const Field& u) const {
        Field out(width_, height_);
        apply(u, out);
        return out;
    }

    double max_abs_diag() const {
        double m = 0.0;
        for (double v : wC_) m = std::max(m, std::abs(v));
        return m;
    }

    double min_offdiag() const {
        double m = std::numeric_limits<double>::infinity();
        for (int j = 0; j < height_; ++j) {
            for (int i = 0; i < width_; ++i) {
                std::size_t p = pix(i, j);
                if (i + 1 < width_) m = std::min(m, wE_[p]);
                if (i > 0) m = std::min(m, wW_[p]);
                if (j + 1 < height_) m = std::min(m, wS_[p]);
                if (j > 0) m = std::min(m, wN_[p]);
            }
        }
        return m;
    }

    void require_shape(const Field& u) const {
        if (u.width() != width_ || u.height() != height_)
            throw ShapeError("StencilOperator: field shape " + std::to_string(u.width()) +
                             "x" + std::to_string(u.height()) + " does not match operator " +
                             std::to_string(width_) + "x" + std::to_string(height_));
    }

private:
    std::size_t pix(int i, int j) const { return static_cast<std::size_t>(j) * width_ + i; }

    static std::size_t checked_size(int width, int height) {
        if (width < 1 || height < 1)
            throw ShapeError("StencilOperator: width and height must be >= 1");
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    int width_ = 0, height_ = 0;
    double h_ = 1.0;
    StencilKind kind_ = StencilKind::full;
    std::vector<double> wC_, wE_, wW_, wN_, wS_;
};

}  // namespace osmosis
