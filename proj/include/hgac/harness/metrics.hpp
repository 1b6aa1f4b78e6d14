#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "hgac/learner.hpp"

namespace hgac {

/// Locale-independent decimal formatting ('.' decimal point, UTF-8).
inline std::string fmt_double(double v, int precision = 12) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

/// metrics.csv writer. Header:
///   episode,team_return,agent_return_0..,critic_loss,actor_loss,entropy,seconds
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, int n_agents) : out_(path) {
    if (!out_) throw ConfigError("metrics: cannot open '" + path + "' for writing");
    out_ << header(n_agents) << "\n";
  }

  static std::string header(int n_agents) {
    std::string h = "episode,team_return";
    for (int i = 0; i < n_agents; ++i) h += ",agent_return_" + std::to_string(i);
    h += ",critic_loss,actor_loss,entropy,seconds";
    return h;
  }

  void write(const EpisodeRow& row) {
    out_ << row.episode << ',' << fmt_double(row.team_return);
    for (double r : row.agent_returns) out_ << ',' << fmt_double(r);
    out_ << ',' << fmt_double(row.critic_loss) << ',' << fmt_double(row.actor_loss) << ','
         << fmt_double(row.entropy) << ',' << fmt_double(row.seconds) << "\n";
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace hgac
