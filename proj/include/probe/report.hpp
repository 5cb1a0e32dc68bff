#pragma once

#include <string>

#include "probe/harness.hpp"

namespace probe {

// VerificationRecord rows: node,method,metric,theorem,metric_value,bound_value,slack,violated
void write_records_csv(const ReliabilityReport& rep, const std::string& path);

// method x metric table with mean and standard error
void write_aggregate_csv(const ReliabilityReport& rep, const std::string& path);

// per-method bound-vs-empirical series for external plotting
void write_series_csv(const ReliabilityReport& rep, const std::string& dir);

std::string format_double(double v);

}  // namespace probe
