#pragma once

// CSV serialization for signal traces and fit data sets. Traces use the
// header `abscissa,value` with a `# unit=` comment; data sets use
// `x,y[,sigma]`. Readers accept either header.

#include <stdexcept>
#include <string>

#include "spintool/fitting.hpp"
#include "spintool/sequences.hpp"

namespace spintool {

struct ParseError : std::runtime_error {
    ParseError(const std::string& file, int line, const std::string& what);
    std::string file;
    int line;
};

void write_trace_csv(const SignalTrace& trace, const std::string& path);
SignalTrace read_trace_csv(const std::string& path);

void write_dataset_csv(const DataSet& data, const std::string& path);
DataSet read_dataset_csv(const std::string& path);

} // namespace spintool
