#include "freshlink/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace freshlink {

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

}  // namespace

std::string render_metrics_csv(const std::vector<MetricsReport>& reports) {
    std::string out = kMetricsCsvHeader;
    out += '\n';
    for (const auto& report : reports) {
        for (const auto& row : report.rows) {
            out += report.run_id;
            out += ',';
            out += report.policy;
            out += ',';
            out += std::to_string(report.n);
            out += ',';
            out += fmt6(report.rate_fps);
            out += ',';
            out += row.follower_id;
            out += ',';
            out += fmt6(row.mean_aoi_s);
            out += ',';
            out += fmt6(row.p95_aoi_s);
            out += ',';
            out += fmt6(row.throughput_bps);
            out += ',';
            out += std::to_string(row.deliveries);
            out += ',';
            out += fmt6(row.mean_tracking_error_m);
            out += '\n';
        }
    }
    return out;
}

void write_metrics_csv(const std::vector<MetricsReport>& reports,
                       const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open for writing: " + path.string());
    f << render_metrics_csv(reports);
    if (!f)
        throw std::runtime_error("write failed: " + path.string());
}

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path) {
    write_metrics_csv(std::vector<MetricsReport>{report}, path);
}

std::vector<MetricsCsvRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for reading: " + path.string());
    std::string line;
    std::vector<MetricsCsvRow> rows;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line_no == 1) {
            if (line != kMetricsCsvHeader)
                throw std::runtime_error("row 1: unexpected CSV header");
            continue;
        }
        auto fields = split_csv_line(line);
        std::size_t row_no = line_no - 1;  // data rows, header not counted
        if (fields.size() != 10)
            throw std::runtime_error("row " + std::to_string(row_no) + ": expected 10 fields");
        MetricsCsvRow row;
        try {
            row.run_id = fields[0];
            row.policy = fields[1];
            row.n = std::stoul(fields[2]);
            row.rate_fps = std::stod(fields[3]);
            row.follower_id = fields[4];
            row.mean_aoi_s = std::stod(fields[5]);
            row.p95_aoi_s = std::stod(fields[6]);
            row.throughput_bps = std::stod(fields[7]);
            row.deliveries = std::stoull(fields[8]);
            row.mean_tracking_error_m = std::stod(fields[9]);
        } catch (const std::exception&) {
            throw std::runtime_error("row " + std::to_string(row_no) + ": malformed field");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace freshlink
