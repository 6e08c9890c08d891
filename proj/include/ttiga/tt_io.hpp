#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "ttiga/tt_tensor.hpp"

namespace ttiga {

/// Binary container "TTK1". All integers are little-endian uint64:
///
///   magic "TTK1" (4 bytes)
///   kind            0 = TT tensor, 1 = TT matrix
///   d               number of cores
///   shape           d entries (tensor) or d row sizes followed by d column sizes (matrix)
///   ranks           d + 1 entries, first and last equal to 1
///   cores           float64 little-endian, core after core, each core in its
///                   storage order (left rank fastest, then mode index / row, column, then right rank)
using TTObject = std::variant<TTTensor, TTMatrix>;

void write_tt(std::ostream& os, const TTTensor& t);
void write_tt(std::ostream& os, const TTMatrix& a);
void save_tt(const std::filesystem::path& path, const TTTensor& t);
void save_tt(const std::filesystem::path& path, const TTMatrix& a);

TTObject read_tt(std::istream& is);
TTObject load_tt(const std::filesystem::path& path);

/// Human-readable summary (kind, shapes, ranks, storage).
std::string describe(const TTObject& obj);

}  // namespace ttiga
