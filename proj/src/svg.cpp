// SPDX-License-Identifier: Apache-2.0
//
// Static multi-panel execution plot: HPC lines, disk scatter colored by op,
// syscall strip scatter, network TX/RX rates. Plain SVG, no scripts, no
// external assets.

#include "samosa/analysis.hpp"
#include "samosa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace samosa::analysis {

namespace {

constexpr double kWidth = 1080;
constexpr double kPanelHeight = 210;
constexpr double kPanelGap = 46;
constexpr double kLeft = 90;
constexpr double kRight = 1020;
constexpr double kTop = 50;
constexpr std::size_t kMaxPointsPerChannel = 6000;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_count(double v) {
    char buf[40];
    if (v >= 1e9)
        std::snprintf(buf, sizeof(buf), "%.1fG", v / 1e9);
    else if (v >= 1e6)
        std::snprintf(buf, sizeof(buf), "%.1fM", v / 1e6);
    else if (v >= 1e3)
        std::snprintf(buf, sizeof(buf), "%.1fk", v / 1e3);
    else
        std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
}

class Panel {
public:
    Panel(std::ostringstream& out, double top, const std::string& title,
          const Timeline& tl)
        : out_(out), top_(top), bottom_(top + kPanelHeight), tl_(tl) {
        out_ << "<rect x=\"" << kLeft << "\" y=\"" << top_ << "\" width=\""
             << (kRight - kLeft) << "\" height=\"" << kPanelHeight
             << "\" fill=\"#fbfbfb\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
        out_ << "<text x=\"" << kLeft << "\" y=\"" << (top_ - 8)
             << "\" font-size=\"14\" font-family=\"sans-serif\" fill=\"#111\">"
             << esc(title) << "</text>\n";
        draw_time_axis();
    }

    double x(std::int64_t ts_ns) const {
        const double span = std::max<double>(1.0, static_cast<double>(tl_.t1_ns - tl_.t0_ns));
        return kLeft + (static_cast<double>(ts_ns - tl_.t0_ns) / span) * (kRight - kLeft);
    }

    double y(double value, double vmin, double vmax) const {
        if (vmax <= vmin)
            return bottom_ - kPanelHeight / 2;
        const double frac = (value - vmin) / (vmax - vmin);
        return bottom_ - frac * (kPanelHeight - 16) - 8;
    }

    void y_label(double value, double vmin, double vmax, const std::string& text) {
        out_ << "<text x=\"" << (kLeft - 6) << "\" y=\"" << (y(value, vmin, vmax) + 4)
             << "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\" "
                "fill=\"#333\">"
             << esc(text) << "</text>\n";
    }

    void label_left(double py, const std::string& text) {
        out_ << "<text x=\"" << (kLeft - 6) << "\" y=\"" << (py + 3)
             << "\" font-size=\"9\" font-family=\"sans-serif\" text-anchor=\"end\" "
                "fill=\"#333\">"
             << esc(text) << "</text>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
        if (pts.empty())
            return;
        out_ << "<polyline fill=\"none\" stroke=\"" << color
             << "\" stroke-width=\"1.2\" points=\"";
        for (const auto& [px, py] : pts)
            out_ << fmt(px) << "," << fmt(py) << " ";
        out_ << "\"/>\n";
    }

    void dot(double px, double py, const char* color) {
        out_ << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py)
             << "\" r=\"1.8\" fill=\"" << color << "\"/>\n";
    }

    void legend(const std::vector<std::pair<std::string, const char*>>& entries) {
        double lx = kRight - 170;
        double ly = top_ + 14;
        for (const auto& [name, color] : entries) {
            out_ << "<rect x=\"" << lx << "\" y=\"" << (ly - 8)
                 << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
            out_ << "<text x=\"" << (lx + 14) << "\" y=\"" << ly
                 << "\" font-size=\"10\" font-family=\"sans-serif\" fill=\"#333\">"
                 << esc(name) << "</text>\n";
            ly += 14;
        }
    }

private:
    void draw_time_axis() {
        const double span_s =
            static_cast<double>(tl_.t1_ns - tl_.t0_ns) / 1e9;
        for (int i = 0; i <= 6; ++i) {
            const double frac = static_cast<double>(i) / 6.0;
            const double px = kLeft + frac * (kRight - kLeft);
            out_ << "<line x1=\"" << px << "\" y1=\"" << bottom_ << "\" x2=\"" << px
                 << "\" y2=\"" << (bottom_ + 4) << "\" stroke=\"#444\"/>\n";
            out_ << "<text x=\"" << px << "\" y=\"" << (bottom_ + 16)
                 << "\" font-size=\"10\" font-family=\"sans-serif\" "
                    "text-anchor=\"middle\" fill=\"#333\">"
                 << fmt(frac * span_s) << "s</text>\n";
        }
    }

    std::ostringstream& out_;
    double top_;
    double bottom_;
    const Timeline& tl_;
};

template <typename T>
std::size_t stride_for(const std::vector<T>& v) {
    return v.size() > kMaxPointsPerChannel ? v.size() / kMaxPointsPerChannel + 1 : 1;
}

} // namespace

void write_report_svg(const AggregatedReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    const double height = kTop + 4 * (kPanelHeight + kPanelGap) + 30;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << kWidth << " " << height
        << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << height
        << "\" fill=\"#ffffff\"/>\n";
    out << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"16\" "
        << "font-family=\"sans-serif\" fill=\"#000\">Run " << esc(report.manifest.run_id)
        << " &#8212; " << esc(report.manifest.binary_name) << "</text>\n";

    const Timeline& tl = report.timeline;
    double panel_top = kTop;

    {
        Panel p(out, panel_top, "Hardware performance counters (counts per interval)", tl);
        double vmax = 1.0;
        for (const auto& [name, pts] : report.hpc.counters)
            for (const auto& pt : pts)
                vmax = std::max(vmax, static_cast<double>(pt.value));
        std::vector<std::pair<std::string, const char*>> legend;
        std::size_t color_idx = 0;
        for (const auto& [name, pts] : report.hpc.counters) {
            const char* color = kPalette[color_idx % 10];
            ++color_idx;
            std::vector<std::pair<double, double>> line;
            const std::size_t stride = stride_for(pts);
            for (std::size_t i = 0; i < pts.size(); i += stride)
                line.emplace_back(p.x(pts[i].host_ts_ns),
                                  p.y(static_cast<double>(pts[i].value), 0, vmax));
            p.polyline(line, color);
            legend.emplace_back(name, color);
        }
        p.y_label(0, 0, vmax, "0");
        p.y_label(vmax, 0, vmax, fmt_count(vmax));
        p.legend(legend);
    }
    panel_top += kPanelHeight + kPanelGap;

    {
        const char* unit_label =
            report.disk.unit == AddressUnit::LBA ? "logical block address" : "sector";
        Panel p(out, panel_top, std::string("Disk activity (") + unit_label +
                                    " vs time; blue=read, red=write)",
                tl);
        double amin = 0, amax = 1;
        if (!report.disk.points.empty()) {
            amin = static_cast<double>(report.disk.points.front().address);
            amax = amin;
            for (const auto& pt : report.disk.points) {
                amin = std::min(amin, static_cast<double>(pt.address));
                amax = std::max(amax, static_cast<double>(pt.address));
            }
            if (amax == amin)
                amax = amin + 1;
        }
        const std::size_t stride = stride_for(report.disk.points);
        for (std::size_t i = 0; i < report.disk.points.size(); i += stride) {
            const auto& pt = report.disk.points[i];
            p.dot(p.x(pt.host_ts_ns), p.y(static_cast<double>(pt.address), amin, amax),
                  pt.op == collectors::DiskOp::READ ? "#1f77b4" : "#d62728");
        }
        p.y_label(amin, amin, amax, fmt_count(amin));
        p.y_label(amax, amin, amax, fmt_count(amax));
    }
    panel_top += kPanelHeight + kPanelGap;

    {
        Panel p(out, panel_top, "Syscall scatter (top " +
                                    std::to_string(report.syscalls.ranked.size()) +
                                    " by count)",
                tl);
        const std::size_t n = report.syscalls.ranked.size();
        for (std::size_t r = 0; r < n; ++r) {
            const auto& entry = report.syscalls.ranked[r];
            const double py =
                p.y(static_cast<double>(n - r), 0, static_cast<double>(n + 1));
            std::string label = entry.syscall;
            if (label.size() > 16)
                label.resize(16);
            p.label_left(py, label);
            const char* color = kPalette[r % 10];
            const std::size_t stride = stride_for(entry.timestamps);
            for (std::size_t i = 0; i < entry.timestamps.size(); i += stride)
                p.dot(p.x(entry.timestamps[i]), py, color);
        }
    }
    panel_top += kPanelHeight + kPanelGap;

    {
        Panel p(out, panel_top, "Network activity (KB/s per " +
                                    std::to_string(report.net.window_ms) + " ms window)",
                tl);
        double vmax = 1.0;
        for (const auto& b : report.net.bins)
            vmax = std::max({vmax, b.tx_kb_s, b.rx_kb_s});
        std::vector<std::pair<double, double>> tx_line, rx_line;
        const std::size_t stride = stride_for(report.net.bins);
        for (std::size_t i = 0; i < report.net.bins.size(); i += stride) {
            const auto& b = report.net.bins[i];
            tx_line.emplace_back(p.x(b.bin_start_ns), p.y(b.tx_kb_s, 0, vmax));
            rx_line.emplace_back(p.x(b.bin_start_ns), p.y(b.rx_kb_s, 0, vmax));
        }
        p.polyline(tx_line, "#2ca02c");
        p.polyline(rx_line, "#ff7f0e");
        p.legend({{"TX", "#2ca02c"}, {"RX", "#ff7f0e"}});
        p.y_label(0, 0, vmax, "0");
        p.y_label(vmax, 0, vmax, fmt_count(vmax) + " KB/s");
    }

    out << "</svg>\n";

    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw IoError("cannot write " + path.string());
    file << out.str();
    if (!file.flush())
        throw IoError("failed writing " + path.string());
}

} // namespace samosa::analysis
