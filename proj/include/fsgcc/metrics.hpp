#pragma once

#include <string>
#include <vector>

namespace fsgcc {

enum class Method { Gcc, Svd, Wsvd, Cnn };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct TdeRecord {
    int true_tdoa = 0;
    int estimated_tdoa = 0;
    double peak_snr_db = 0.0;
    double correlation_time = 0.0;  // samples, > 0
    Method method = Method::Gcc;
};

struct MetricsSummary {
    double anomalous_pct = 0.0;          // P, over all records
    double mean_peak_snr_db = 0.0;       // rho, nonanomalous only
    double mae = 0.0;                    // nonanomalous only, samples
    double sdae = 0.0;                   // population std of |e|, nonanomalous
    std::size_t count_total = 0;
    std::size_t count_anomalous = 0;
    bool nonanomalous_stats_defined = false;
};

// |true - estimated| > correlation_time / 2, strict inequality.
bool is_anomalous(const TdeRecord& record);

// rho = 20 log10(|peak| / RMS of lags outside +/- guard around the peak).
// Zero off-peak RMS yields +infinity.
double peak_snr(const std::vector<double>& lag_values, int peak_index, int guard);

MetricsSummary summarize(const std::vector<TdeRecord>& records);

}  // namespace fsgcc
