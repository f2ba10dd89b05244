#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mining/sim_oracle.hpp"

namespace mining {

// Dataset CSV: header `id,f0,...,f{d-1},label`, LF line endings, '.' decimal
// separator. label is 0..m-1, -1 for UNDEFINED, or empty when withheld.
// Reals are written in shortest round-trip form.

void write_dataset_csv(std::ostream& out, const std::vector<DatasetRow>& rows);
void write_dataset_csv(const std::filesystem::path& path, const std::vector<DatasetRow>& rows);

/// Throws InvalidArgument with the offending line number on malformed input.
std::vector<DatasetRow> read_dataset_csv(std::istream& in);
std::vector<DatasetRow> read_dataset_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

}  // namespace mining
