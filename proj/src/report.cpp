#include "avsl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace avsl {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

BoxplotStats boxplot_stats(std::span<const double> xs) {
    if (xs.size() < 4) {
        raise(ErrorKind::too_few_samples,
              "boxplot_stats: need >= 4 values, got " + std::to_string(xs.size()));
    }
    BoxplotStats s;
    s.min = *std::min_element(xs.begin(), xs.end());
    s.q1 = quantile(xs, 0.25);
    s.median = quantile(xs, 0.5);
    s.q3 = quantile(xs, 0.75);
    s.max = *std::max_element(xs.begin(), xs.end());
    s.n = static_cast<int>(xs.size());
    return s;
}

std::string export_boxplot_csv(
    const std::vector<std::pair<std::string, std::vector<double>>>& maxima_by_condition,
    double theta, int n_calibration) {
    std::ostringstream out;
    out << "condition,min,q1,median,q3,max,n\n";
    for (const auto& [name, values] : maxima_by_condition) {
        const BoxplotStats s = boxplot_stats(values);
        out << name << ',' << fmt(s.min) << ',' << fmt(s.q1) << ',' << fmt(s.median) << ','
            << fmt(s.q3) << ',' << fmt(s.max) << ',' << s.n << "\n";
    }
    out << "theta," << fmt(theta) << ',' << fmt(theta) << ',' << fmt(theta) << ',' << fmt(theta)
        << ',' << fmt(theta) << ',' << n_calibration << "\n";
    return out.str();
}

namespace {

json metrics_to_json(const MetricsReport& m) {
    json pia_obj, auc_n_obj;
    for (Condition c : kAllConditions) {
        pia_obj[std::string(condition_name(c))] = m.pia[static_cast<std::size_t>(c)];
        auc_n_obj[std::string(condition_name(c))] = m.auc_n[static_cast<std::size_t>(c)];
    }
    return json{{"ciou_uth", m.ciou_uth},
                {"ciou_adap", m.ciou_adap},
                {"auc_uth", m.auc_uth},
                {"auc_adap", m.auc_adap},
                {"pia", pia_obj},
                {"auc_n", auc_n_obj},
                {"f_loc", m.f_loc},
                {"f_auc", m.f_auc},
                {"separability", m.separability},
                {"alignment", m.alignment},
                {"magnitude", m.magnitude},
                {"theta", m.theta},
                {"n_samples", m.n_samples}};
}

MetricsReport metrics_from_json(const json& j) {
    MetricsReport m;
    m.ciou_uth = j.at("ciou_uth").get<double>();
    m.ciou_adap = j.at("ciou_adap").get<double>();
    m.auc_uth = j.at("auc_uth").get<double>();
    m.auc_adap = j.at("auc_adap").get<double>();
    for (Condition c : kAllConditions) {
        m.pia[static_cast<std::size_t>(c)] =
            j.at("pia").at(std::string(condition_name(c))).get<double>();
        m.auc_n[static_cast<std::size_t>(c)] =
            j.at("auc_n").at(std::string(condition_name(c))).get<double>();
    }
    m.f_loc = j.at("f_loc").get<double>();
    m.f_auc = j.at("f_auc").get<double>();
    m.separability = j.at("separability").get<double>();
    m.alignment = j.at("alignment").get<double>();
    m.magnitude = j.at("magnitude").get<double>();
    m.theta = j.at("theta").get<double>();
    m.n_samples = j.at("n_samples").get<int>();
    return m;
}

json boxplot_to_json(const BoxplotStats& s) {
    return json{{"min", s.min}, {"q1", s.q1},   {"median", s.median},
                {"q3", s.q3},   {"max", s.max}, {"n", s.n}};
}

BoxplotStats boxplot_from_json(const json& j) {
    BoxplotStats s;
    s.min = j.at("min").get<double>();
    s.q1 = j.at("q1").get<double>();
    s.median = j.at("median").get<double>();
    s.q3 = j.at("q3").get<double>();
    s.max = j.at("max").get<double>();
    s.n = j.at("n").get<int>();
    return s;
}

} // namespace

void save_report(const std::filesystem::path& path, const ReportFile& report) {
    json boxplot;
    for (const auto& [name, stats] : report.boxplot) {
        boxplot[name] = boxplot_to_json(stats);
    }
    json j{{"metrics", metrics_to_json(report.metrics)},
           {"boxplot", boxplot},
           {"provenance", json{{"tool_version", report.provenance.tool_version},
                               {"config_hash", report.provenance.config_hash},
                               {"dataset_hash", report.provenance.dataset_hash},
                               {"calib_conditions", report.provenance.calib_conditions},
                               {"n_calibration", report.provenance.n_calibration},
                               {"auc_grid", report.provenance.auc_grid},
                               {"quantile_method", report.provenance.quantile_method},
                               {"timestamp", report.provenance.timestamp}}}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write report " + path.string());
    out << j.dump(2) << "\n";
}

ReportFile load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot read report " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        raise(ErrorKind::config_error, "invalid JSON in report " + path.string());
    }
    try {
        ReportFile r;
        r.metrics = metrics_from_json(j.at("metrics"));
        if (j.contains("boxplot")) {
            for (auto it = j.at("boxplot").begin(); it != j.at("boxplot").end(); ++it) {
                r.boxplot[it.key()] = boxplot_from_json(it.value());
            }
        }
        const json& p = j.at("provenance");
        r.provenance.tool_version = p.at("tool_version").get<std::string>();
        r.provenance.config_hash = p.at("config_hash").get<std::string>();
        r.provenance.dataset_hash = p.at("dataset_hash").get<std::string>();
        r.provenance.calib_conditions = p.at("calib_conditions").get<std::vector<std::string>>();
        r.provenance.n_calibration = p.at("n_calibration").get<int>();
        r.provenance.auc_grid = p.at("auc_grid").get<std::string>();
        r.provenance.quantile_method = p.at("quantile_method").get<std::string>();
        r.provenance.timestamp = p.at("timestamp").get<std::string>();
        return r;
    } catch (const json::exception& ex) {
        raise(ErrorKind::config_error, "report " + path.string() + ": " + ex.what());
    }
}

std::string fnv1a_hex(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_string(const std::string& s) {
    return fnv1a_hex({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot hash missing file " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hash_string(bytes);
}

namespace {

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

std::string render_report_table(const std::vector<std::pair<std::string, ReportFile>>& reports,
                                const std::string& format) {
    const std::vector<std::string> header = {
        "model",        "ciou_uth",      "ciou_adap", "auc_uth",  "auc_adap",
        "pia_silence",  "pia_noise",     "pia_offscreen", "aucn_silence", "aucn_noise",
        "aucn_offscreen", "f_loc",       "f_auc",     "sep",      "alignment",
        "magnitude"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& [name, r] : reports) {
        const MetricsReport& m = r.metrics;
        rows.push_back({name, fixed2(m.ciou_uth), fixed2(m.ciou_adap), fixed2(m.auc_uth),
                        fixed2(m.auc_adap), fixed2(m.pia[0]), fixed2(m.pia[1]), fixed2(m.pia[2]),
                        fixed2(m.auc_n[0]), fixed2(m.auc_n[1]), fixed2(m.auc_n[2]),
                        fixed2(m.f_loc), fixed2(m.f_auc), fixed4(m.separability),
                        fixed4(m.alignment), fixed4(m.magnitude)});
    }
    std::ostringstream out;
    if (format == "csv") {
        for (std::size_t i = 0; i < header.size(); ++i) {
            out << header[i] << (i + 1 < header.size() ? "," : "\n");
        }
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << row[i] << (i + 1 < row.size() ? "," : "\n");
            }
        }
    } else if (format == "md") {
        out << "|";
        for (const auto& h : header) out << " " << h << " |";
        out << "\n|";
        for (std::size_t i = 0; i < header.size(); ++i) out << " --- |";
        out << "\n";
        for (const auto& row : rows) {
            out << "|";
            for (const auto& cell : row) out << " " << cell << " |";
            out << "\n";
        }
    } else {
        raise(ErrorKind::usage, "report format must be csv or md, got " + format);
    }
    return out.str();
}

} // namespace avsl
