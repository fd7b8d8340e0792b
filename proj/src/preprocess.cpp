#include "fedtst/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "fedtst/errors.hpp"

namespace fedtst {

namespace {

std::vector<double> feature_column(const RawTrace& trace, std::size_t f) {
    std::vector<double> col;
    col.reserve(trace.size());
    for (const TraceRow& row : trace.rows) col.push_back(row[f]);
    return col;
}

}  // namespace

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw DataError("percentile of empty data");
    if (p < 0.0 || p > 100.0) {
        throw ConfigError("percentile must be in [0,100], got " + std::to_string(p));
    }
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * double(values.size() - 1);
    const std::size_t lo = std::size_t(rank);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - double(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

ScalerState fit_scaler(const RawTrace& trace) {
    if (trace.empty()) throw DataError("fit_scaler: empty trace");
    ScalerState s;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        std::vector<double> col = feature_column(trace, f);
        s.median[f] = percentile(col, 50.0);
        s.iqr[f] = percentile(col, 75.0) - percentile(std::move(col), 25.0);
    }
    return s;
}

RawTrace apply_scaler(const RawTrace& trace, const ScalerState& scaler) {
    RawTrace out = trace;
    for (TraceRow& row : out.rows) {
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            row[f] = (row[f] - scaler.median[f]) / scaler.divisor(f);
        }
    }
    return out;
}

OutlierBounds outlier_bounds(const RawTrace& trace, double k) {
    if (k <= 0.0) throw ConfigError("outlier factor k must be positive");
    if (trace.empty()) throw DataError("outlier_bounds: empty trace");
    OutlierBounds b;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        std::vector<double> col = feature_column(trace, f);
        const double q1 = percentile(col, 25.0);
        const double q3 = percentile(col, 75.0);
        b.median[f] = percentile(std::move(col), 50.0);
        b.lo[f] = q1 - k * (q3 - q1);
        b.hi[f] = q3 + k * (q3 - q1);
    }
    return b;
}

RawTrace apply_outlier_bounds(const RawTrace& trace, const OutlierBounds& bounds) {
    RawTrace out = trace;
    for (TraceRow& row : out.rows) {
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            if (row[f] < bounds.lo[f] || row[f] > bounds.hi[f]) row[f] = bounds.median[f];
        }
    }
    return out;
}

RawTrace replace_outliers_iqr(const RawTrace& trace, double k) {
    if (k <= 0.0) throw ConfigError("outlier factor k must be positive");
    if (trace.empty()) return trace;
    return apply_outlier_bounds(trace, outlier_bounds(trace, k));
}

RawTrace log_transform(const RawTrace& trace, const std::vector<std::string>& features) {
    std::vector<std::size_t> idx;
    idx.reserve(features.size());
    for (const std::string& name : features) idx.push_back(feature_index(name));

    RawTrace out = trace;
    for (std::size_t t = 0; t < out.rows.size(); ++t) {
        for (std::size_t f : idx) {
            const double v = out.rows[t][f];
            if (v < 0.0) {
                throw DataError("log_transform: negative value " + std::to_string(v) +
                                " in feature " + std::string(kFeatureNames[f]) + " at step " +
                                std::to_string(t));
            }
            out.rows[t][f] = std::log1p(v);
        }
    }
    return out;
}

SequenceData make_sequences(const RawTrace& trace, std::size_t seq_len, std::size_t stride,
                            const std::vector<std::string>& target_features) {
    if (seq_len < 2) throw ConfigError("seq_len must be at least 2");
    if (stride < 1 || stride >= seq_len) {
        throw ConfigError("stride must be in [1, seq_len); windows must overlap");
    }
    if (target_features.empty()) throw ConfigError("need at least one target feature");
    if (trace.size() < seq_len + 1) {
        throw DataError("trace has " + std::to_string(trace.size()) +
                        " steps; need at least " + std::to_string(seq_len + 1));
    }

    std::vector<std::size_t> tgt;
    tgt.reserve(target_features.size());
    for (const std::string& name : target_features) tgt.push_back(feature_index(name));

    const std::size_t n = trace.size();
    const std::size_t count = (n - seq_len - 1) / stride + 1;
    const std::size_t f_out = tgt.size();

    SequenceData data;
    data.count = count;
    data.seq_len = seq_len;
    data.target_features = target_features;
    data.inputs = Tensor::zeros({count, seq_len, kNumFeatures});
    data.targets = Tensor::zeros({count, f_out});

    auto in = data.inputs.values();
    auto out = data.targets.values();
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t start = i * stride;
        for (std::size_t t = 0; t < seq_len; ++t) {
            const TraceRow& row = trace.rows[start + t];
            for (std::size_t f = 0; f < kNumFeatures; ++f) {
                in[(i * seq_len + t) * kNumFeatures + f] = row[f];
            }
        }
        const TraceRow& next = trace.rows[start + seq_len];
        for (std::size_t j = 0; j < f_out; ++j) out[i * f_out + j] = next[tgt[j]];
    }
    return data;
}

PreprocessResult preprocess_trace(const RawTrace& trace, double outlier_k,
                                  const std::vector<std::string>& log_features) {
    RawTrace logged = log_transform(trace, log_features);
    RawTrace cleaned = replace_outliers_iqr(logged, outlier_k);
    PreprocessResult result;
    result.scaler = fit_scaler(cleaned);
    result.scaled = apply_scaler(cleaned, result.scaler);
    return result;
}

}  // namespace fedtst
