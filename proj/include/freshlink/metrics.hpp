#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace freshlink {

struct MetricsRow {
    std::string follower_id;  // numeric id or "all"
    double mean_aoi_s{0.0};
    double p95_aoi_s{0.0};
    double throughput_bps{0.0};
    std::uint64_t deliveries{0};
    double mean_tracking_error_m{0.0};
};

struct MetricsReport {
    std::string run_id;
    std::string policy;
    std::size_t n{0};
    double rate_fps{0.0};
    std::vector<MetricsRow> rows;  // per follower, then the "all" aggregate
    // protocol accounting (not part of the CSV schema)
    std::uint64_t polls{0};
    std::uint64_t responses{0};
    std::uint64_t timeouts{0};
};

inline constexpr const char* kMetricsCsvHeader =
    "run_id,policy,n,rate_fps,follower_id,mean_aoi_s,p95_aoi_s,throughput_bps,deliveries,"
    "mean_tracking_error_m";

/// Renders reports to the fixed-column CSV (6 significant digits, LF line
/// endings); byte-stable for identical inputs. Throws std::runtime_error on
/// I/O failure, naming the path.
void write_metrics_csv(const std::vector<MetricsReport>& reports,
                       const std::filesystem::path& path);
void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path);
std::string render_metrics_csv(const std::vector<MetricsReport>& reports);

/// Parsed CSV record (one row).
struct MetricsCsvRow {
    std::string run_id, policy, follower_id;
    std::size_t n{0};
    double rate_fps{0}, mean_aoi_s{0}, p95_aoi_s{0}, throughput_bps{0},
        mean_tracking_error_m{0};
    std::uint64_t deliveries{0};
};

/// Reads a metrics CSV; throws std::runtime_error naming the offending row
/// on malformed input.
std::vector<MetricsCsvRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace freshlink
