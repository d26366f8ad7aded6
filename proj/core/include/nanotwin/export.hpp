#pragma once

// CSV exports.
//
//   field map:    x_nm,e_y,ldos
//   measurement:  abscissa_<unit>,ordinate_<unit>            (1D records)
//                 time_s,abscissa_<unit>,ordinate_<unit>     (time-resolved spectra)
//   summary:      quantity,label,value,sigma,unit,record_seq
//
// The summary collects coupling reports, fitted slopes and linewidths and
// cooperativity estimates from a log; a log without such records gives a
// header-only file.

#include <string>

#include "nanotwin/field_model.hpp"
#include "nanotwin/log.hpp"
#include "nanotwin/photophysics.hpp"

namespace nanotwin {

std::string field_map_csv(const ModeField& field, double x0_nm, double x1_nm, double step_nm,
                          double z_nm = 0.0);

std::string measurement_csv(const MeasurementRecord& record);

/// Measurement stored in the log record with sequence number `seq`. Throws
/// not_found if there is no such record or it carries no raw data.
MeasurementRecord measurement_from_log(const ExperimentLog& log, std::uint64_t seq);

std::string summary_csv(const ExperimentLog& log);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace nanotwin
