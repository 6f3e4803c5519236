#include "emdloss/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emdloss/errors.hpp"

namespace emdloss {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw parse_error("bad number: '" + s + "'");
    return v;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

const char* const kHistoryHeader =
    "epoch,loss_XE_component,loss_reg_component,lambda,train_AEM,test_AEM,test_AEO,SDD";

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& epochs) {
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot write history file: " + path);
    out << kHistoryHeader << '\n';
    for (const auto& e : epochs) {
        out << e.epoch << ',' << format_double(e.loss_primary) << ','
            << format_double(e.loss_reg) << ',' << format_double(e.lambda) << ','
            << format_double(e.train_aem) << ',' << format_double(e.test_aem) << ','
            << format_double(e.test_aeo) << ',' << format_double(e.sdd) << '\n';
    }
}

std::vector<EpochRecord> parse_history_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open history file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty history file: " + path);
    if (line != kHistoryHeader)
        throw parse_error(path + ":1: unexpected history header '" + line + "'");
    std::vector<EpochRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 8)
            throw parse_error(path + ":" + std::to_string(line_no) + ": expected 8 columns");
        EpochRecord e;
        try {
            e.epoch = std::stoi(fields[0]);
            e.loss_primary = parse_double(fields[1]);
            e.loss_reg = parse_double(fields[2]);
            e.lambda = parse_double(fields[3]);
            e.train_aem = parse_double(fields[4]);
            e.test_aem = parse_double(fields[5]);
            e.test_aeo = parse_double(fields[6]);
            e.sdd = parse_double(fields[7]);
        } catch (const std::exception& ex) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": " + ex.what());
        }
        out.push_back(e);
    }
    return out;
}

void write_matrix_csv(const std::string& path, const Mat& m) {
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot write matrix file: " + path);
    out << "class";
    for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << j;
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << i;
        for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
        out << '\n';
    }
}

Mat parse_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open matrix file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty matrix file: " + path);
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "class")
        throw parse_error(path + ":1: expected 'class' label header");
    const std::size_t cols = header.size() - 1;
    std::vector<Vec> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != cols + 1)
            throw parse_error(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(cols + 1) + " fields");
        Vec row(cols);
        for (std::size_t j = 0; j < cols; ++j) row[j] = parse_double(fields[j + 1]);
        rows.push_back(std::move(row));
    }
    if (rows.size() != cols)
        throw parse_error(path + ": matrix is " + std::to_string(rows.size()) + "x" +
                          std::to_string(cols) + ", expected square");
    Mat m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
}

std::string eval_report_to_json(const EvalReport& report) {
    json j;
    j["aem"] = report.aem;
    j["aeo"] = report.aeo;
    if (report.spearman_rho)
        j["spearman_rho"] = *report.spearman_rho;
    else
        j["spearman_rho"] = nullptr;
    if (report.sdd)
        j["sdd"] = *report.sdd;
    else
        j["sdd"] = nullptr;
    j["confusion"] = report.per_class_confusion;
    return j.dump();
}

EvalReport eval_report_from_json(const std::string& line) {
    EvalReport r;
    json j;
    try {
        j = json::parse(line);
        r.aem = j.at("aem").get<double>();
        r.aeo = j.at("aeo").get<double>();
        if (!j.at("spearman_rho").is_null()) r.spearman_rho = j["spearman_rho"].get<double>();
        if (!j.at("sdd").is_null()) r.sdd = j["sdd"].get<double>();
        r.per_class_confusion = j.at("confusion").get<std::vector<std::vector<long>>>();
    } catch (const json::exception& ex) {
        throw parse_error(std::string("bad eval report json: ") + ex.what());
    }
    return r;
}

void append_eval_report(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw invalid_input_error("cannot write eval report: " + path);
    out << eval_report_to_json(report) << '\n';
}

std::vector<EvalReport> parse_eval_reports(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open eval report: " + path);
    std::vector<EvalReport> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(eval_report_from_json(line));
    }
    return out;
}

void write_bins_json(const std::string& path, const Vec& edges, const Vec& centers) {
    json j;
    j["bin_edges"] = edges;
    j["bin_centers"] = centers;
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot write bins file: " + path);
    out << j.dump(2) << '\n';
}

std::pair<Vec, Vec> parse_bins_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open bins file: " + path);
    json j;
    try {
        in >> j;
        return {j.at("bin_edges").get<Vec>(), j.at("bin_centers").get<Vec>()};
    } catch (const json::exception& ex) {
        throw parse_error(path + ": " + ex.what());
    }
}

}  // namespace emdloss
