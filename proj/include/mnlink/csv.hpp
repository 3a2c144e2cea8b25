#ifndef MNLINK_CSV_HPP
#define MNLINK_CSV_HPP

#include <iosfwd>
#include <string>

#include "mnlink/data.hpp"

namespace mnlink {

// Dataset CSV format: header "x1,..,xk,y1,..,yq,n", numeric body, lines
// starting with '#' ignored.  Throws ParseError with the row/column location
// on malformed input; ValidationError on invalid content.
Dataset load_csv(const std::string& path);
Dataset read_csv(std::istream& in, const std::string& origin);

void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::string& path);

}  // namespace mnlink

#endif
