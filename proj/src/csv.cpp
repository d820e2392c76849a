#include "rarehmm/csv.hpp"

#include "rarehmm/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rarehmm {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

double ReportUnits::scale() const { return bits ? 1.0 / std::log(2.0) : 1.0; }

namespace {

std::string fmt_log(double value, ReportUnits units) {
  return format_double(value * units.scale());
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows, ReportUnits units) {
  const bool bsc = !rows.empty() && rows.front().bsc_applicable;
  std::ostringstream out;
  out << "p,n,reps,L,K,h_markov,h_chan_avg,h_joint,h_y_est,h_y_stderr,"
         "h_xy_cond_est,h_xy_cond_stderr,defect,smoothing_error_rate,"
         "filtering_error_rate,freq_many,freq_boundary,freq_good_near,"
         "freq_good_far,mean_abs_offset,offset_entropy";
  if (bsc) out << ",bsc_lower,bsc_upper";
  out << '\n';
  for (const SweepRow& r : rows) {
    out << format_double(r.p) << ',' << r.n << ',' << r.reps << ','
        << r.block_len << ',' << r.margin << ',' << fmt_log(r.h_markov, units)
        << ',' << fmt_log(r.h_chan_avg, units) << ','
        << fmt_log(r.h_joint, units) << ',' << fmt_log(r.h_y_est, units) << ','
        << fmt_log(r.h_y_stderr, units) << ','
        << fmt_log(r.h_xy_cond_est, units) << ','
        << fmt_log(r.h_xy_cond_stderr, units) << ','
        << fmt_log(r.defect, units) << ','
        << format_double(r.smoothing_error_rate) << ','
        << format_double(r.filtering_error_rate) << ','
        << format_double(r.freq_many) << ',' << format_double(r.freq_boundary)
        << ',' << format_double(r.freq_good_near) << ','
        << format_double(r.freq_good_far) << ','
        << format_double(r.mean_abs_offset) << ','
        << fmt_log(r.offset_entropy, units);
    if (bsc) {
      out << ',' << fmt_log(r.bsc_lower, units) << ','
          << fmt_log(r.bsc_upper, units);
    }
    out << '\n';
  }
  return out.str();
}

std::string estimates_csv(const std::vector<EntropyEstimate>& estimates,
                          ReportUnits units) {
  std::ostringstream out;
  out << "kind,mean,stderr,n,reps\n";
  for (const EntropyEstimate& e : estimates) {
    out << entropy_kind_name(e.kind) << ',' << fmt_log(e.mean, units) << ','
        << fmt_log(e.stderr_, units) << ',' << e.n << ',' << e.reps << '\n';
  }
  return out.str();
}

std::string bracket_csv(const std::vector<Bracket>& brackets,
                        ReportUnits units) {
  std::ostringstream out;
  out << "depth,lower,upper\n";
  for (const Bracket& b : brackets) {
    out << b.depth << ',' << fmt_log(b.lower, units) << ','
        << fmt_log(b.upper, units) << '\n';
  }
  return out.str();
}

std::string block_diagnostics_csv(const std::vector<BlockDiagnostic>& blocks,
                                  ReportUnits units) {
  std::ostringstream out;
  out << "block_index,event,transitions,true_cut,recon_cut,offset,hamming,"
         "loglik_recon,loglik_truth\n";
  for (const BlockDiagnostic& b : blocks) {
    out << b.block_index << ',' << event_class_name(b.event) << ','
        << b.transitions << ',' << b.true_cut << ',' << b.recon_cut << ',';
    if (b.has_offset) out << b.offset;
    out << ',' << b.hamming_distance << ',' << fmt_log(b.loglik_recon, units)
        << ',' << fmt_log(b.loglik_truth, units) << '\n';
  }
  return out.str();
}

std::string offset_tail_csv(const OffsetTailHistogram& tail) {
  std::ostringstream out;
  out << "offset,count\n";
  for (const auto& [offset, count] : tail.offset_counts) {
    out << offset << ',' << count << '\n';
  }
  return out.str();
}

std::string paired_decode_csv(const std::vector<PairedDecodeRow>& rows) {
  std::ostringstream out;
  out << "p,L,K,n,smoothing_error_rate,filtering_error_rate,ratio\n";
  for (const PairedDecodeRow& r : rows) {
    out << format_double(r.p) << ',' << r.block_len << ',' << r.margin << ','
        << r.n << ',' << format_double(r.smoothing_error_rate) << ','
        << format_double(r.filtering_error_rate) << ','
        << format_double(r.ratio) << '\n';
  }
  return out.str();
}

std::string event_scaling_csv(const std::vector<EventScalingRow>& rows) {
  std::ostringstream out;
  out << "p,L,K,blocks,emp_many,emp_boundary,emp_good_far,"
         "emp_good_near_moving,exact_many,exact_boundary\n";
  for (const EventScalingRow& r : rows) {
    out << format_double(r.p) << ',' << r.block_len << ',' << r.margin << ','
        << r.blocks << ',' << format_double(r.emp_many) << ','
        << format_double(r.emp_boundary) << ','
        << format_double(r.emp_good_far) << ','
        << format_double(r.emp_good_near_moving) << ',';
    if (r.exact_available) {
      out << format_double(r.exact_many) << ','
          << format_double(r.exact_boundary);
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::config_parse, "cannot open " + path + " for writing");
  out.write(contents.data(),
            static_cast<std::streamsize>(contents.size()));
  if (!out) fail(errc::config_parse, "failed writing " + path);
}

}  // namespace rarehmm
