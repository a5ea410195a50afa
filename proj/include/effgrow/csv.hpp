#pragma once

#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace effgrow::csv {

/// Shortest-form-independent rendering: printf("%.17g"), so values round-trip.
std::string format(double x);

/// One CSV table: header plus rows of already-formatted cells.
class Table {
public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  Table& add_row(std::vector<std::string> cells);
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  std::size_t column(std::string_view name) const;  // throws std::out_of_range

  /// Comment lines written before the header, each prefixed with "# ".
  std::vector<std::string> preamble;

  void write(std::ostream& os) const;
  std::string str() const;

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string join(std::span<const double> values, char sep = ',');
std::vector<double> parse_list(std::string_view text, char sep = ',');

}  // namespace effgrow::csv
