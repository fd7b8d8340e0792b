#include "fedtst/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "fedtst/errors.hpp"

namespace fedtst {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

[[noreturn]] void dim_fail(const std::string& op, const Tensor& a, const Tensor& b) {
    throw DimensionError(op + ": incompatible shapes " + shape_to_string(a.shape()) +
                         " and " + shape_to_string(b.shape()));
}

}  // namespace

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ',';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.storage_ = std::make_shared<Storage>();
    t.storage_->value.assign(shape_product(shape), 0.0);
    t.shape_ = std::move(shape);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.storage_->value.begin(), t.storage_->value.end(), value);
    return t;
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> values) {
    if (shape_product(shape) != values.size()) {
        throw DimensionError("Tensor::from_data: shape " + shape_to_string(shape) +
                             " does not match " + std::to_string(values.size()) +
                             " values");
    }
    Tensor t;
    t.storage_ = std::make_shared<Storage>();
    t.storage_->value = std::move(values);
    t.shape_ = std::move(shape);
    return t;
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

std::size_t Tensor::size() const { return storage_ ? storage_->value.size() : 0; }

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

std::size_t Tensor::rows() const {
    const std::size_t c = cols();
    return c == 0 ? 0 : size() / c;
}

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("Tensor::item: expected a single element, got shape " +
                             shape_to_string(shape_));
    }
    return storage_->value[0];
}

std::span<const double> Tensor::values() const { return storage_->value; }
std::span<double> Tensor::values() { return storage_->value; }

bool Tensor::has_grad() const { return storage_ && !storage_->grad.empty(); }

void Tensor::ensure_grad() {
    if (storage_->grad.size() != storage_->value.size()) {
        storage_->grad.assign(storage_->value.size(), 0.0);
    }
}

void Tensor::zero_grad() {
    if (has_grad()) std::fill(storage_->grad.begin(), storage_->grad.end(), 0.0);
}

std::span<double> Tensor::grad() {
    ensure_grad();
    return storage_->grad;
}

std::span<const double> Tensor::grad() const { return storage_->grad; }

Tensor Tensor::reshape(std::vector<std::size_t> new_shape) const {
    if (shape_product(new_shape) != size()) {
        throw DimensionError("Tensor::reshape: cannot view " + shape_to_string(shape_) +
                             " as " + shape_to_string(new_shape));
    }
    Tensor t;
    t.storage_ = storage_;
    t.shape_ = std::move(new_shape);
    return t;
}

Tensor Tensor::clone() const {
    Tensor t;
    t.storage_ = std::make_shared<Storage>();
    t.storage_->value = storage_->value;
    t.shape_ = shape_;
    return t;
}

void Tape::record(std::function<void()> step) {
    if (recording_) steps_.push_back(std::move(step));
}

void Tape::backward(Tensor loss) {
    if (loss.size() != 1) {
        throw DimensionError("Tape::backward: loss must be a single element, got " +
                             shape_to_string(loss.shape()));
    }
    loss.ensure_grad();
    loss.grad()[0] = 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
    steps_.clear();
}

// ---------------------------------------------------------------------------
// Ops
// ---------------------------------------------------------------------------

namespace {

// Raw matrix product helper: c[m,n] += or = a[m,k] * b[k,n]. i-k-j order keeps
// the inner loop contiguous in both b and c.
void matmul_into(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c[m,k] += a[m,n] * b^T[n,k]  (i.e. a * transpose(b) with b stored [k,n])
void matmul_bt_into(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

// c[k,n] += a^T[k,m] * b[m,n] with a stored [m,k]
void matmul_at_into(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void softmax_row(const double* x, double* y, std::size_t n) {
    double mx = x[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = std::exp(x[j] - mx);
        sum += y[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < n; ++j) y[j] *= inv;
}

// Generic elementwise unary op. dfdx receives (x, y) so derivatives can be
// written in terms of whichever is cheaper.
template <typename F, typename DF>
Tensor unary_op(Tape& tape, const Tensor& x, F f, DF dfdx) {
    Tensor y = Tensor::zeros(x.shape());
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = f(xv[i]);
    if (tape.recording()) {
        tape.record([x = x, y, dfdx]() mutable {
            auto gx = x.grad();
            auto gy = y.grad();
            auto xv = x.values();
            auto yv = y.values();
            for (std::size_t i = 0; i < gx.size(); ++i) {
                gx[i] += gy[i] * dfdx(xv[i], yv[i]);
            }
        });
    }
    return y;
}

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        dim_fail("matmul", a, b);
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor c = Tensor::zeros({m, n});
    matmul_into(a.values().data(), b.values().data(), c.values().data(), m, k, n, false);
    if (tape.recording()) {
        tape.record([a = a, b = b, c, m, k, n]() mutable {
            // dA += dC * B^T ; dB += A^T * dC
            matmul_bt_into(c.grad().data(), b.values().data(), a.grad().data(), m, n, k);
            matmul_at_into(a.values().data(), c.grad().data(), b.grad().data(), m, k, n);
        });
    }
    return c;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) dim_fail("add", a, b);
    Tensor c = Tensor::zeros(a.shape());
    auto av = a.values(), bv = b.values();
    auto cv = c.values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = av[i] + bv[i];
    if (tape.recording()) {
        tape.record([a = a, b = b, c]() mutable {
            auto ga = a.grad(), gb = b.grad();
            auto gc = c.grad();
            for (std::size_t i = 0; i < gc.size(); ++i) {
                ga[i] += gc[i];
                gb[i] += gc[i];
            }
        });
    }
    return c;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) dim_fail("sub", a, b);
    Tensor c = Tensor::zeros(a.shape());
    auto av = a.values(), bv = b.values();
    auto cv = c.values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = av[i] - bv[i];
    if (tape.recording()) {
        tape.record([a = a, b = b, c]() mutable {
            auto ga = a.grad(), gb = b.grad();
            auto gc = c.grad();
            for (std::size_t i = 0; i < gc.size(); ++i) {
                ga[i] += gc[i];
                gb[i] -= gc[i];
            }
        });
    }
    return c;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) dim_fail("mul", a, b);
    Tensor c = Tensor::zeros(a.shape());
    auto av = a.values(), bv = b.values();
    auto cv = c.values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = av[i] * bv[i];
    if (tape.recording()) {
        tape.record([a = a, b = b, c]() mutable {
            auto ga = a.grad(), gb = b.grad();
            auto gc = c.grad();
            auto av = a.values(), bv = b.values();
            for (std::size_t i = 0; i < gc.size(); ++i) {
                ga[i] += gc[i] * bv[i];
                gb[i] += gc[i] * av[i];
            }
        });
    }
    return c;
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
    Tensor c = Tensor::zeros(a.shape());
    auto av = a.values();
    auto cv = c.values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = av[i] * factor;
    if (tape.recording()) {
        tape.record([a = a, c, factor]() mutable {
            auto ga = a.grad();
            auto gc = c.grad();
            for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i] * factor;
        });
    }
    return c;
}

Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
    if (bias.rank() != 1 || bias.size() != x.cols()) dim_fail("add_bias", x, bias);
    const std::size_t rows = x.rows(), n = x.cols();
    Tensor y = Tensor::zeros(x.shape());
    auto xv = x.values(), bv = bias.values();
    auto yv = y.values();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < n; ++j) yv[r * n + j] = xv[r * n + j] + bv[j];
    }
    if (tape.recording()) {
        tape.record([x = x, bias = bias, y, rows, n]() mutable {
            auto gx = x.grad(), gb = bias.grad();
            auto gy = y.grad();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < n; ++j) {
                    gx[r * n + j] += gy[r * n + j];
                    gb[j] += gy[r * n + j];
                }
            }
        });
    }
    return y;
}

Tensor mul_rows(Tape& tape, const Tensor& x, const Tensor& v) {
    if (v.rank() != 1 || v.size() != x.cols()) dim_fail("mul_rows", x, v);
    const std::size_t rows = x.rows(), n = x.cols();
    Tensor y = Tensor::zeros(x.shape());
    auto xv = x.values(), vv = v.values();
    auto yv = y.values();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < n; ++j) yv[r * n + j] = xv[r * n + j] * vv[j];
    }
    if (tape.recording()) {
        tape.record([x = x, v = v, y, rows, n]() mutable {
            auto gx = x.grad(), gv = v.grad();
            auto gy = y.grad();
            auto xv = x.values(), vv = v.values();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < n; ++j) {
                    gx[r * n + j] += gy[r * n + j] * vv[j];
                    gv[j] += gy[r * n + j] * xv[r * n + j];
                }
            }
        });
    }
    return y;
}

Tensor add_cyclic_rows(Tape& tape, const Tensor& x, const Tensor& table) {
    if (table.cols() != x.cols() || table.rows() == 0) dim_fail("add_cyclic_rows", x, table);
    const std::size_t rows = x.rows(), n = x.cols(), period = table.rows();
    Tensor y = Tensor::zeros(x.shape());
    auto xv = x.values(), tv = table.values();
    auto yv = y.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* trow = tv.data() + (r % period) * n;
        for (std::size_t j = 0; j < n; ++j) yv[r * n + j] = xv[r * n + j] + trow[j];
    }
    if (tape.recording()) {
        tape.record([x = x, y]() mutable {
            auto gx = x.grad();
            auto gy = y.grad();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
        });
    }
    return y;
}

Tensor gelu(Tape& tape, const Tensor& x) {
    return unary_op(
        tape, x,
        [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
        [](double v, double) {
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            return cdf + v * pdf;
        });
}

Tensor tanh_op(Tape& tape, const Tensor& x) {
    return unary_op(
        tape, x, [](double v) { return std::tanh(v); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(Tape& tape, const Tensor& x) {
    return unary_op(
        tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor abs_op(Tape& tape, const Tensor& x) {
    return unary_op(
        tape, x, [](double v) { return std::fabs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor square(Tape& tape, const Tensor& x) {
    return unary_op(
        tape, x, [](double v) { return v * v; },
        [](double v, double) { return 2.0 * v; });
}

Tensor huber(Tape& tape, const Tensor& x, double delta) {
    return unary_op(
        tape, x,
        [delta](double v) {
            const double a = std::fabs(v);
            return a <= delta ? 0.5 * v * v : delta * (a - 0.5 * delta);
        },
        [delta](double v, double) {
            const double a = std::fabs(v);
            return a <= delta ? v : (v > 0.0 ? delta : -delta);
        });
}

Tensor softmax_rows(Tape& tape, const Tensor& x) {
    const std::size_t rows = x.rows(), n = x.cols();
    Tensor y = Tensor::zeros(x.shape());
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t r = 0; r < rows; ++r) {
        softmax_row(xv.data() + r * n, yv.data() + r * n, n);
    }
    if (tape.recording()) {
        tape.record([x = x, y, rows, n]() mutable {
            auto gx = x.grad();
            auto gy = y.grad();
            auto yv = y.values();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* yr = yv.data() + r * n;
                const double* gyr = gy.data() + r * n;
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += gyr[j] * yr[j];
                double* gxr = gx.data() + r * n;
                for (std::size_t j = 0; j < n; ++j) gxr[j] += yr[j] * (gyr[j] - dot);
            }
        });
    }
    return y;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
    const std::size_t d = x.cols();
    if (gain.size() != d || bias.size() != d) dim_fail("layer_norm", x, gain);
    if (eps <= 0.0) throw ConfigError("layer_norm: eps must be positive");
    const std::size_t rows = x.rows();
    Tensor y = Tensor::zeros(x.shape());
    // xhat and the inverse stddev are needed by the backward step.
    Tensor xhat = Tensor::zeros(x.shape());
    Tensor inv_std = Tensor::zeros({rows});
    auto xv = x.values(), gv = gain.values(), bv = bias.values();
    auto yv = y.values();
    auto hv = xhat.values();
    auto sv = inv_std.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = xr[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        sv[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xr[j] - mean) * is;
            hv[r * d + j] = h;
            yv[r * d + j] = gv[j] * h + bv[j];
        }
    }
    if (tape.recording()) {
        tape.record([x = x, gain = gain, bias = bias, y, xhat, inv_std, rows,
                     d]() mutable {
            auto gx = x.grad(), gg = gain.grad(), gb = bias.grad();
            auto gy = y.grad();
            auto hv = xhat.values();
            auto sv = inv_std.values();
            auto gv = gain.values();
            const double dn = static_cast<double>(d);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* gyr = gy.data() + r * d;
                const double* hr = hv.data() + r * d;
                double sum_g = 0.0, sum_gh = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double gj = gyr[j] * gv[j];
                    sum_g += gj;
                    sum_gh += gj * hr[j];
                    gg[j] += gyr[j] * hr[j];
                    gb[j] += gyr[j];
                }
                const double is = sv[r];
                double* gxr = gx.data() + r * d;
                for (std::size_t j = 0; j < d; ++j) {
                    const double gj = gyr[j] * gv[j];
                    gxr[j] += is * (gj - sum_g / dn - hr[j] * sum_gh / dn);
                }
            }
        });
    }
    return y;
}

Tensor multihead_attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v,
                           std::size_t batch, std::size_t seq_len, std::size_t n_heads,
                           Tensor* attn_out) {
    const std::size_t d = q.cols();
    if (q.shape() != k.shape() || q.shape() != v.shape()) dim_fail("multihead_attention", q, k);
    if (d % n_heads != 0) {
        throw DimensionError("multihead_attention: model dim " + std::to_string(d) +
                             " not divisible by " + std::to_string(n_heads) + " heads");
    }
    if (q.rows() != batch * seq_len) {
        throw DimensionError("multihead_attention: expected " +
                             std::to_string(batch * seq_len) + " rows, got " +
                             std::to_string(q.rows()));
    }
    const std::size_t hd = d / n_heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
    Tensor y = Tensor::zeros(q.shape());
    Tensor weights = Tensor::zeros({batch, n_heads, seq_len, seq_len});

    auto qv = q.values(), kv = k.values(), vv = v.values();
    auto yv = y.values();
    auto wv = weights.values();
    const std::size_t t2 = seq_len * seq_len;
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t row0 = b * seq_len;
        for (std::size_t h = 0; h < n_heads; ++h) {
            const std::size_t col0 = h * hd;
            double* w = wv.data() + (b * n_heads + h) * t2;
            // scores then softmax, row by row
            for (std::size_t i = 0; i < seq_len; ++i) {
                const double* qi = qv.data() + (row0 + i) * d + col0;
                double* wrow = w + i * seq_len;
                for (std::size_t j = 0; j < seq_len; ++j) {
                    const double* kj = kv.data() + (row0 + j) * d + col0;
                    double acc = 0.0;
                    for (std::size_t e = 0; e < hd; ++e) acc += qi[e] * kj[e];
                    wrow[j] = acc * att_scale;
                }
                softmax_row(wrow, wrow, seq_len);
            }
            // y = weights * v
            for (std::size_t i = 0; i < seq_len; ++i) {
                const double* wrow = w + i * seq_len;
                double* yi = yv.data() + (row0 + i) * d + col0;
                for (std::size_t j = 0; j < seq_len; ++j) {
                    const double a = wrow[j];
                    const double* vj = vv.data() + (row0 + j) * d + col0;
                    for (std::size_t e = 0; e < hd; ++e) yi[e] += a * vj[e];
                }
            }
        }
    }
    if (attn_out) *attn_out = weights;

    if (tape.recording()) {
        tape.record([q = q, k = k, v = v, y, weights, batch, seq_len, n_heads, hd, d,
                     att_scale, t2]() mutable {
            auto gq = q.grad(), gk = k.grad(), gv_ = v.grad();
            auto gy = y.grad();
            auto qv = q.values(), kv = k.values(), vv = v.values();
            auto wv = weights.values();
            std::vector<double> dw(t2);
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t row0 = b * seq_len;
                for (std::size_t h = 0; h < n_heads; ++h) {
                    const std::size_t col0 = h * hd;
                    const double* w = wv.data() + (b * n_heads + h) * t2;
                    // dV += W^T dY ; dW = dY V^T
                    for (std::size_t i = 0; i < seq_len; ++i) {
                        const double* gyi = gy.data() + (row0 + i) * d + col0;
                        const double* wrow = w + i * seq_len;
                        double* dwrow = dw.data() + i * seq_len;
                        for (std::size_t j = 0; j < seq_len; ++j) {
                            const double* vj = vv.data() + (row0 + j) * d + col0;
                            double* gvj = gv_.data() + (row0 + j) * d + col0;
                            double acc = 0.0;
                            for (std::size_t e = 0; e < hd; ++e) {
                                acc += gyi[e] * vj[e];
                                gvj[e] += wrow[j] * gyi[e];
                            }
                            dwrow[j] = acc;
                        }
                    }
                    // softmax backward in place on dw, then dQ/dK
                    for (std::size_t i = 0; i < seq_len; ++i) {
                        const double* wrow = w + i * seq_len;
                        double* dwrow = dw.data() + i * seq_len;
                        double dot = 0.0;
                        for (std::size_t j = 0; j < seq_len; ++j) dot += dwrow[j] * wrow[j];
                        for (std::size_t j = 0; j < seq_len; ++j) {
                            dwrow[j] = wrow[j] * (dwrow[j] - dot) * att_scale;
                        }
                        const double* qi = qv.data() + (row0 + i) * d + col0;
                        double* gqi = gq.data() + (row0 + i) * d + col0;
                        for (std::size_t j = 0; j < seq_len; ++j) {
                            const double ds = dwrow[j];
                            if (ds == 0.0) continue;
                            const double* kj = kv.data() + (row0 + j) * d + col0;
                            double* gkj = gk.data() + (row0 + j) * d + col0;
                            for (std::size_t e = 0; e < hd; ++e) {
                                gqi[e] += ds * kj[e];
                                gkj[e] += ds * qi[e];
                            }
                        }
                    }
                }
            }
        });
    }
    return y;
}

Tensor mean_pool_rows(Tape& tape, const Tensor& x, std::size_t group) {
    const std::size_t rows = x.rows(), n = x.cols();
    if (group == 0 || rows % group != 0) {
        throw DimensionError("mean_pool_rows: " + std::to_string(rows) +
                             " rows not divisible into groups of " + std::to_string(group));
    }
    const std::size_t out_rows = rows / group;
    Tensor y = Tensor::zeros({out_rows, n});
    auto xv = x.values();
    auto yv = y.values();
    const double inv = 1.0 / static_cast<double>(group);
    for (std::size_t r = 0; r < rows; ++r) {
        double* yr = yv.data() + (r / group) * n;
        const double* xr = xv.data() + r * n;
        for (std::size_t j = 0; j < n; ++j) yr[j] += xr[j] * inv;
    }
    if (tape.recording()) {
        tape.record([x = x, y, rows, n, group, inv]() mutable {
            auto gx = x.grad();
            auto gy = y.grad();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* gyr = gy.data() + (r / group) * n;
                double* gxr = gx.data() + r * n;
                for (std::size_t j = 0; j < n; ++j) gxr[j] += gyr[j] * inv;
            }
        });
    }
    return y;
}

Tensor mean_all(Tape& tape, const Tensor& x) {
    const std::size_t n = x.size();
    auto xv = x.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += xv[i];
    Tensor y = Tensor::scalar(acc / static_cast<double>(n));
    if (tape.recording()) {
        tape.record([x = x, y, n]() mutable {
            const double g = y.grad()[0] / static_cast<double>(n);
            auto gx = x.grad();
            for (std::size_t i = 0; i < n; ++i) gx[i] += g;
        });
    }
    return y;
}

Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end) {
    const std::size_t rows = x.rows(), n = x.cols();
    if (begin > end || end > rows) {
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," +
                             std::to_string(end) + ") out of " + std::to_string(rows) +
                             " rows");
    }
    Tensor y = Tensor::zeros({end - begin, n});
    auto xv = x.values();
    auto yv = y.values();
    std::copy(xv.begin() + begin * n, xv.begin() + end * n, yv.begin());
    if (tape.recording()) {
        tape.record([x = x, y, begin, end, n]() mutable {
            auto gx = x.grad();
            auto gy = y.grad();
            for (std::size_t i = 0; i < (end - begin) * n; ++i) gx[begin * n + i] += gy[i];
        });
    }
    return y;
}

Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) dim_fail("concat_rows", a, b);
    const std::size_t n = a.cols(), ra = a.rows(), rb = b.rows();
    Tensor y = Tensor::zeros({ra + rb, n});
    auto av = a.values(), bv = b.values();
    auto yv = y.values();
    std::copy(av.begin(), av.end(), yv.begin());
    std::copy(bv.begin(), bv.end(), yv.begin() + ra * n);
    if (tape.recording()) {
        tape.record([a = a, b = b, y, ra, rb, n]() mutable {
            auto ga = a.grad(), gb = b.grad();
            auto gy = y.grad();
            for (std::size_t i = 0; i < ra * n; ++i) ga[i] += gy[i];
            for (std::size_t i = 0; i < rb * n; ++i) gb[i] += gy[ra * n + i];
        });
    }
    return y;
}

Tensor weighted_sum(Tape& tape, const std::vector<Tensor>& terms,
                    const std::vector<double>& weights) {
    if (terms.size() != weights.size() || terms.empty()) {
        throw DimensionError("weighted_sum: " + std::to_string(terms.size()) +
                             " terms vs " + std::to_string(weights.size()) + " weights");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) acc += weights[i] * terms[i].item();
    Tensor y = Tensor::scalar(acc);
    if (tape.recording()) {
        tape.record([terms = terms, weights = weights, y]() mutable {
            const double g = y.grad()[0];
            for (std::size_t i = 0; i < terms.size(); ++i) {
                terms[i].grad()[0] += g * weights[i];
            }
        });
    }
    return y;
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    }
    if (rate == 0.0) return x;
    Tensor y = Tensor::zeros(x.shape());
    Tensor mask = Tensor::zeros(x.shape());
    auto xv = x.values();
    auto yv = y.values();
    auto mv = mask.values();
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        mv[i] = rng.uniform() >= rate ? keep_scale : 0.0;
        yv[i] = xv[i] * mv[i];
    }
    if (tape.recording()) {
        tape.record([x = x, y, mask]() mutable {
            auto gx = x.grad();
            auto gy = y.grad();
            auto mv = mask.values();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * mv[i];
        });
    }
    return y;
}

}  // namespace fedtst
