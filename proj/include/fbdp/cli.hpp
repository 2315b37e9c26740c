#pragma once

// Command-line driver. Subcommands: `mesh gen`, `verify`, `simulate`,
// `decompose`, `report`. Global flags: --tol, --seed, --out-dir, --quiet.
// Exit codes: 0 success, 1 check or simulation failure, 2 usage error,
// 3 numerical or I/O failure — never anything else.

#include <string>
#include <vector>

namespace fbdp {

// args excludes the program name, in command-line order.
int run_cli(const std::vector<std::string>& args);

} // namespace fbdp
