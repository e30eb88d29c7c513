#include "fsgcc/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fsgcc {

std::string method_name(Method m) {
    switch (m) {
        case Method::Gcc: return "gcc";
        case Method::Svd: return "svd";
        case Method::Wsvd: return "wsvd";
        case Method::Cnn: return "cnn";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "gcc") return Method::Gcc;
    if (name == "svd") return Method::Svd;
    if (name == "wsvd") return Method::Wsvd;
    if (name == "cnn") return Method::Cnn;
    throw std::invalid_argument("unknown method name: " + name);
}

bool is_anomalous(const TdeRecord& record) {
    const double e = std::abs(static_cast<double>(record.true_tdoa) -
                              static_cast<double>(record.estimated_tdoa));
    return e > record.correlation_time / 2.0;
}

double peak_snr(const std::vector<double>& lag_values, int peak_index, int guard) {
    const int n = static_cast<int>(lag_values.size());
    if (peak_index < 0 || peak_index >= n) {
        throw std::invalid_argument("peak_snr: peak index out of range");
    }
    const double peak = std::abs(lag_values[static_cast<std::size_t>(peak_index)]);
    double acc = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(i - peak_index) <= guard) continue;
        acc += lag_values[static_cast<std::size_t>(i)] * lag_values[static_cast<std::size_t>(i)];
        ++count;
    }
    if (count == 0 || acc == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double rms = std::sqrt(acc / static_cast<double>(count));
    return 20.0 * std::log10(peak / rms);
}

MetricsSummary summarize(const std::vector<TdeRecord>& records) {
    if (records.empty()) {
        throw std::invalid_argument("summarize: empty record collection");
    }
    MetricsSummary s;
    s.count_total = records.size();

    double err_sum = 0.0, err_sq_sum = 0.0, snr_sum = 0.0;
    std::size_t good = 0;
    for (const auto& r : records) {
        if (r.correlation_time <= 0.0) {
            throw std::invalid_argument("summarize: correlation_time must be positive");
        }
        if (is_anomalous(r)) {
            ++s.count_anomalous;
            continue;
        }
        const double e = std::abs(static_cast<double>(r.true_tdoa) -
                                  static_cast<double>(r.estimated_tdoa));
        err_sum += e;
        err_sq_sum += e * e;
        snr_sum += r.peak_snr_db;
        ++good;
    }
    s.anomalous_pct = 100.0 * static_cast<double>(s.count_anomalous) /
                      static_cast<double>(s.count_total);
    if (good > 0) {
        s.nonanomalous_stats_defined = true;
        const double m = static_cast<double>(good);
        s.mae = err_sum / m;
        const double var = std::max(0.0, err_sq_sum / m - s.mae * s.mae);
        s.sdae = std::sqrt(var);
        s.mean_peak_snr_db = snr_sum / m;
    }
    return s;
}

}  // namespace fsgcc
