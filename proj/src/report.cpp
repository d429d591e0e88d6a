#include "groklab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace groklab {

std::string metrics_csv_header() {
    return "epoch,train_loss,test_loss,train_acc,test_acc,med,weight_norm_sum,wall_ms";
}

std::string metrics_row_csv(const MetricsRow& r) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld", r.epoch,
                  r.train_loss, r.test_loss, r.train_acc, r.test_acc, r.med, r.weight_norm_sum,
                  r.wall_ms);
    return buf;
}

std::string metrics_row_jsonl(const MetricsRow& r) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["test_loss"] = r.test_loss;
    j["train_acc"] = r.train_acc;
    j["test_acc"] = r.test_acc;
    j["med"] = r.med;
    j["weight_norm_sum"] = r.weight_norm_sum;
    j["weight_sq_sum"] = r.weight_sq_sum;
    j["wall_ms"] = r.wall_ms;
    return j.dump();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    out << metrics_csv_header() << "\n";
    for (const auto& r : rows) out << metrics_row_csv(r) << "\n";
    if (!out) throw std::runtime_error("write_metrics_csv: write failed for " + path);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_metrics_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_metrics_csv: empty file " + path);
    if (line != metrics_csv_header())
        throw std::runtime_error("read_metrics_csv: unexpected header in " + path);

    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MetricsRow r;
        if (std::sscanf(line.c_str(), "%lld,%lg,%lg,%lg,%lg,%lg,%lg,%lld", &r.epoch,
                        &r.train_loss, &r.test_loss, &r.train_acc, &r.test_acc, &r.med,
                        &r.weight_norm_sum, &r.wall_ms) != 8)
            throw std::runtime_error("read_metrics_csv: malformed row in " + path);
        rows.push_back(r);
    }
    return rows;
}

void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_metrics_jsonl: cannot open " + path);
    for (const auto& r : rows) out << metrics_row_jsonl(r) << "\n";
    if (!out) throw std::runtime_error("write_metrics_jsonl: write failed for " + path);
}

std::vector<MetricsRow> read_metrics_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_metrics_jsonl: cannot open " + path);
    std::vector<MetricsRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        MetricsRow r;
        r.epoch = j.at("epoch").get<long long>();
        r.train_loss = j.at("train_loss").get<double>();
        r.test_loss = j.at("test_loss").get<double>();
        r.train_acc = j.at("train_acc").get<double>();
        r.test_acc = j.at("test_acc").get<double>();
        r.med = j.at("med").get<double>();
        r.weight_norm_sum = j.at("weight_norm_sum").get<double>();
        r.weight_sq_sum = j.value("weight_sq_sum", 0.0);
        r.wall_ms = j.at("wall_ms").get<long long>();
        rows.push_back(r);
    }
    return rows;
}

std::string grokking_report_to_json(const GrokkingReport& report) {
    nlohmann::ordered_json j;
    if (report.memorization_epoch)
        j["memorization_epoch"] = *report.memorization_epoch;
    else
        j["memorization_epoch"] = nullptr;
    if (report.go_epoch)
        j["go_epoch"] = *report.go_epoch;
    else
        j["go_epoch"] = nullptr;  // the rise never happens
    j["u_acc"] = report.u_acc;
    j["l_acc"] = report.l_acc;
    return j.dump(2);
}

GrokkingReport grokking_report_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GrokkingReport report;
    if (!j.at("memorization_epoch").is_null())
        report.memorization_epoch = j.at("memorization_epoch").get<long long>();
    if (!j.at("go_epoch").is_null()) report.go_epoch = j.at("go_epoch").get<long long>();
    report.u_acc = j.at("u_acc").get<double>();
    report.l_acc = j.at("l_acc").get<double>();
    return report;
}

// ---------------------------------------------------------------------------
// SVG chart
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Panel {
    double x0, y0, x1, y1;  // pixel corners, y grows downward
};

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;

    double unit(double v) const {
        if (log) {
            const double l = std::log10(std::max(v, 1e-300));
            return (l - lo) / (hi - lo);
        }
        return (v - lo) / (hi - lo);
    }
};

std::string polyline(const Panel& p, const Axis& xa, const Axis& ya,
                     const std::vector<double>& xs, const std::vector<double>& ys,
                     const std::string& color) {
    std::string pts;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double px = p.x0 + xa.unit(xs[i]) * (p.x1 - p.x0);
        const double py = p.y1 - ya.unit(ys[i]) * (p.y1 - p.y0);
        pts += fmt(px) + "," + fmt(py) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    return "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" +
           pts + "\"/>\n";
}

void axis_ticks(std::ostringstream& svg, const Panel& p, const Axis& ya, bool left) {
    const double x = left ? p.x0 : p.x1;
    const std::string anchor = left ? "end" : "start";
    const double dx = left ? -6.0 : 6.0;
    for (int k = 0; k <= 4; ++k) {
        const double f = k / 4.0;
        const double py = p.y1 - f * (p.y1 - p.y0);
        const double v = ya.lo + f * (ya.hi - ya.lo);
        const double shown = ya.log ? std::pow(10.0, v) : v;
        svg << "<line x1=\"" << fmt(p.x0) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(p.x1)
            << "\" y2=\"" << fmt(py) << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
        svg << "<text x=\"" << fmt(x + dx) << "\" y=\"" << fmt(py + 4) << "\" font-size=\"11\" "
            << "text-anchor=\"" << anchor << "\" fill=\"#444444\">" << fmt_tick(shown)
            << "</text>\n";
    }
}

void x_ticks(std::ostringstream& svg, const Panel& p, const Axis& xa) {
    for (int k = 0; k <= 5; ++k) {
        const double f = k / 5.0;
        const double px = p.x0 + f * (p.x1 - p.x0);
        const double v = xa.lo + f * (xa.hi - xa.lo);
        const double shown = xa.log ? std::pow(10.0, v) : v;
        svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(p.y0) << "\" x2=\"" << fmt(px)
            << "\" y2=\"" << fmt(p.y1) << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
        svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(p.y1 + 16) << "\" font-size=\"11\" "
            << "text-anchor=\"middle\" fill=\"#444444\">" << fmt_tick(shown) << "</text>\n";
    }
}

void legend_entry(std::ostringstream& svg, double x, double y, const std::string& color,
                  const std::string& label) {
    svg << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y - 9) << "\" width=\"18\" height=\"4\" "
        << "fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << fmt(x + 24) << "\" y=\"" << fmt(y) << "\" font-size=\"12\" "
        << "fill=\"#222222\">" << label << "</text>\n";
}

}  // namespace

std::string render_metrics_svg(const std::vector<MetricsRow>& rows, const ReportOptions& options) {
    if (rows.empty()) throw std::invalid_argument("render_metrics_svg: no rows");
    if (options.raw_med && options.p < 2)
        throw std::invalid_argument("render_metrics_svg: raw_med requires p");

    std::vector<double> epochs, train_acc, test_acc, train_loss, test_loss, med_series;
    epochs.reserve(rows.size());
    for (const auto& r : rows) {
        epochs.push_back(static_cast<double>(r.epoch));
        train_acc.push_back(r.train_acc);
        test_acc.push_back(r.test_acc);
        train_loss.push_back(r.train_loss);
        test_loss.push_back(r.test_loss);
        med_series.push_back(options.raw_med ? r.med * options.p : r.med);
    }

    Axis xa;
    xa.log = options.log_x;
    if (xa.log) {
        xa.lo = std::log10(std::max(1.0, epochs.front()));
        xa.hi = std::log10(std::max(epochs.back(), epochs.front() + 1.0));
    } else {
        xa.lo = epochs.front();
        xa.hi = std::max(epochs.back(), epochs.front() + 1.0);
    }

    Axis acc_axis{0.0, 1.0, false};

    double loss_min = 1e300, loss_max = -1e300;
    for (double v : train_loss) {
        loss_min = std::min(loss_min, v);
        loss_max = std::max(loss_max, v);
    }
    for (double v : test_loss) {
        loss_min = std::min(loss_min, v);
        loss_max = std::max(loss_max, v);
    }
    Axis loss_axis;
    loss_axis.log = true;
    loss_axis.lo = std::floor(std::log10(std::max(loss_min, 1e-12)));
    loss_axis.hi = std::ceil(std::log10(std::max(loss_max, 1e-12)));
    if (loss_axis.hi <= loss_axis.lo) loss_axis.hi = loss_axis.lo + 1.0;

    double med_min = 1e300, med_max = -1e300;
    for (double v : med_series) {
        med_min = std::min(med_min, v);
        med_max = std::max(med_max, v);
    }
    Axis med_axis{med_min, med_max > med_min ? med_max : med_min + 1.0, false};

    const double width = 900, height = 640;
    const Panel top{70, 40, width - 70, 290};
    const Panel bottom{70, 350, width - 70, 600};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"#ffffff\"/>\n";

    svg << "<text x=\"" << fmt((top.x0 + top.x1) / 2) << "\" y=\"24\" font-size=\"14\" "
        << "text-anchor=\"middle\" fill=\"#000000\">accuracy</text>\n";
    x_ticks(svg, top, xa);
    axis_ticks(svg, top, acc_axis, true);
    svg << polyline(top, xa, acc_axis, epochs, train_acc, "#1f77b4");
    svg << polyline(top, xa, acc_axis, epochs, test_acc, "#d62728");
    legend_entry(svg, top.x0 + 10, top.y0 + 16, "#1f77b4", "train_acc");
    legend_entry(svg, top.x0 + 120, top.y0 + 16, "#d62728", "test_acc");

    svg << "<text x=\"" << fmt((bottom.x0 + bottom.x1) / 2) << "\" y=\"334\" font-size=\"14\" "
        << "text-anchor=\"middle\" fill=\"#000000\">loss (log) and "
        << (options.raw_med ? "raw med" : "med") << "</text>\n";
    x_ticks(svg, bottom, xa);
    axis_ticks(svg, bottom, loss_axis, true);
    axis_ticks(svg, bottom, med_axis, false);
    {
        std::vector<double> log_train(train_loss.size()), log_test(test_loss.size());
        for (size_t i = 0; i < train_loss.size(); ++i)
            log_train[i] = std::log10(std::max(train_loss[i], 1e-12));
        for (size_t i = 0; i < test_loss.size(); ++i)
            log_test[i] = std::log10(std::max(test_loss[i], 1e-12));
        Axis unit_loss{loss_axis.lo, loss_axis.hi, false};
        svg << polyline(bottom, xa, unit_loss, epochs, log_train, "#2ca02c");
        svg << polyline(bottom, xa, unit_loss, epochs, log_test, "#ff7f0e");
    }
    svg << polyline(bottom, xa, med_axis, epochs, med_series, "#9467bd");
    legend_entry(svg, bottom.x0 + 10, bottom.y0 + 16, "#2ca02c", "train_loss");
    legend_entry(svg, bottom.x0 + 120, bottom.y0 + 16, "#ff7f0e", "test_loss");
    legend_entry(svg, bottom.x0 + 230, bottom.y0 + 16, "#9467bd",
                 options.raw_med ? "med (raw)" : "med");

    svg << "<text x=\"" << fmt((bottom.x0 + bottom.x1) / 2) << "\" y=\"" << fmt(height - 8)
        << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#444444\">epoch"
        << (options.log_x ? " (log)" : "") << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace groklab
