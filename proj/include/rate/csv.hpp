#pragma once

#include <iosfwd>
#include <string>

#include "rate/model.hpp"

namespace rate {

// Numeric CSV with a required header row: comma separated, `.` decimal point,
// no quoting. Every cell must parse as a double.
RawColumns parse_csv(const std::string& text);
RawColumns read_csv(const std::string& path);

// Writes doubles in shortest round-trip form, so parse_csv(format_csv(c))
// reproduces every value bit for bit.
std::string format_csv(const RawColumns& columns);
void write_csv(std::ostream& out, const RawColumns& columns);

std::string format_double(double value);

}  // namespace rate
