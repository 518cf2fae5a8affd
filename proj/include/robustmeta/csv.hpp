#ifndef ROBUSTMETA_CSV_HPP
#define ROBUSTMETA_CSV_HPP

#include <string>

#include "robustmeta/types.hpp"

namespace robustmeta {

// Parse a study table: header `id,y,s2` or `id,y,se` (exactly one of the
// two), plus optional covariate columns prefixed `x_`.  `se` is squared on
// ingest.  Throws std::runtime_error naming the offending line or study.
Dataset load_csv(const std::string& path);

// Serialize with an `s2` column (and any covariates); full round-trip
// precision.
void write_csv(const Dataset& data, const std::string& path);

// Shortest round-trip decimal form of a double (what the CSV/JSON writers use).
std::string format_double(double v);

}  // namespace robustmeta

#endif  // ROBUSTMETA_CSV_HPP
