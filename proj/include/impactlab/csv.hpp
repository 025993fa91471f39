// SPDX-License-Identifier: MIT
//
// CSV dialect shared by every artifact: comma separated, '.' decimal point,
// one header row, LF line endings, floats with 17 significant digits.
#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace impactlab::csv {

/// Shortest-safe round-trip text of a double ("%.17g", locale independent).
[[nodiscard]] std::string format(double v);

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    /// "# key=value" line placed before the header (e.g. the config hash).
    void comment(std::string_view key, std::string_view value);
    void header(std::initializer_list<std::string_view> columns);
    void row(const std::vector<std::string>& cells);
    void row(std::initializer_list<double> values);

private:
    std::ostream& out_;
};

}  // namespace impactlab::csv
