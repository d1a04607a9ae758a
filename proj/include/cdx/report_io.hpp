#ifndef CDX_REPORT_IO_HPP
#define CDX_REPORT_IO_HPP

#include <string>
#include <vector>

#include "cdx/residual.hpp"

namespace cdx {

inline constexpr int kReportSchemaVersion = 1;

/* One CSV line per residual row:
 *
 *   schema_version,equation_id,h,res_Linf,res_L2,tail,order_est,exact
 *
 * Numbers print with %.17g (round-trip exact), so identical rows always
 * produce identical bytes. */
std::string rows_to_csv(const std::vector<ResidualRow>& rows);

/* JSON mirror of the rows plus scenario identification and solver stats. */
std::string report_to_json(const std::string& run_id, const Scenario& sc, const SolveStats& stats,
                           const std::vector<ResidualRow>& rows);

const char* closure_name(Closure c);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace cdx

#endif
