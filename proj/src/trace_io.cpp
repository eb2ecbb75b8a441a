#include "spintool/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace spintool {

namespace {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct Csv {
    std::string unit;
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    Csv csv;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("unit=");
            if (pos != std::string::npos) csv.unit = line.substr(pos + 5);
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.push_back("");
        if (!header_seen) {
            csv.header = fields;
            csv.columns.assign(fields.size(), {});
            header_seen = true;
            continue;
        }
        if (fields.size() != csv.header.size())
            throw ParseError(path, lineno, "expected " + std::to_string(csv.header.size()) +
                                               " fields, got " + std::to_string(fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(fields[i], &used);
            } catch (const std::exception&) {
                throw ParseError(path, lineno, "not a number: '" + fields[i] + "'");
            }
            if (used != fields[i].size())
                throw ParseError(path, lineno, "trailing characters in '" + fields[i] + "'");
            csv.columns[i].push_back(v);
        }
    }
    if (!header_seen) throw ParseError(path, lineno, "empty input, no header row");
    if (csv.columns.empty() || csv.columns[0].empty())
        throw ParseError(path, lineno, "no data rows");
    return csv;
}

bool is_xy_header(const std::vector<std::string>& h) {
    return (h.size() == 2 || h.size() == 3) &&
           ((h[0] == "x" && h[1] == "y") || (h[0] == "abscissa" && h[1] == "value"));
}

} // namespace

ParseError::ParseError(const std::string& file_, int line_, const std::string& what_)
    : std::runtime_error(file_ + ":" + std::to_string(line_) + ": " + what_),
      file(file_),
      line(line_) {}

void write_trace_csv(const SignalTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path, 0, "cannot open file for writing");
    out << "# unit=" << trace.unit << "\n";
    out << "abscissa,value\n";
    for (std::size_t i = 0; i < trace.abscissa.size(); ++i)
        out << format_number(trace.abscissa[i]) << "," << format_number(trace.values[i])
            << "\n";
}

SignalTrace read_trace_csv(const std::string& path) {
    const Csv csv = read_csv(path);
    if (!is_xy_header(csv.header) || csv.header.size() != 2)
        throw ParseError(path, 1, "expected header 'abscissa,value'");
    if (csv.unit.empty()) throw ParseError(path, 1, "missing '# unit=' comment");
    SignalTrace t;
    t.unit = csv.unit;
    t.abscissa = csv.columns[0];
    t.values = csv.columns[1];
    return t;
}

void write_dataset_csv(const DataSet& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path, 0, "cannot open file for writing");
    if (!data.x_unit.empty()) out << "# unit=" << data.x_unit << "\n";
    out << (data.sigma.empty() ? "x,y" : "x,y,sigma") << "\n";
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        out << format_number(data.x[i]) << "," << format_number(data.y[i]);
        if (!data.sigma.empty()) out << "," << format_number(data.sigma[i]);
        out << "\n";
    }
}

DataSet read_dataset_csv(const std::string& path) {
    const Csv csv = read_csv(path);
    if (!is_xy_header(csv.header))
        throw ParseError(path, 1, "expected header 'x,y[,sigma]' or 'abscissa,value'");
    DataSet d;
    d.x_unit = csv.unit;
    d.x = csv.columns[0];
    d.y = csv.columns[1];
    if (csv.columns.size() == 3) d.sigma = csv.columns[2];
    return d;
}

} // namespace spintool
