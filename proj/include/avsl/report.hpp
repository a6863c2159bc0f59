#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "avsl/conditions.hpp"
#include "avsl/metrics.hpp"

namespace avsl {

inline constexpr const char* kToolVersion = "avsl 0.1.0";

struct BoxplotStats {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    int n = 0;
};

BoxplotStats boxplot_stats(std::span<const double> xs);

// CSV with one row per condition (condition,min,q1,median,q3,max,n) and a
// final "theta" row repeating theta across the stat columns.
std::string export_boxplot_csv(
    const std::vector<std::pair<std::string, std::vector<double>>>& maxima_by_condition,
    double theta, int n_calibration);

struct Provenance {
    std::string tool_version = kToolVersion;
    std::string config_hash;
    std::string dataset_hash;
    std::vector<std::string> calib_conditions;
    int n_calibration = 0;
    std::string auc_grid = "trapezoid-21";
    std::string quantile_method = "linear-interpolation";
    std::string timestamp; // flag-supplied; empty keeps reports byte-stable
};

struct ReportFile {
    MetricsReport metrics;
    std::map<std::string, BoxplotStats> boxplot; // positive + three negatives
    Provenance provenance;
};

void save_report(const std::filesystem::path& path, const ReportFile& report);
ReportFile load_report(const std::filesystem::path& path);

// FNV-1a 64-bit, hex-encoded; provenance hashing only.
std::string fnv1a_hex(std::span<const std::uint8_t> bytes);
std::string hash_string(const std::string& s);
std::string hash_file(const std::filesystem::path& path);

// Comparison table over several named reports (Table-2 shape).
std::string render_report_table(const std::vector<std::pair<std::string, ReportFile>>& reports,
                                const std::string& format);

} // namespace avsl
