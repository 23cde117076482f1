#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lace/rng.hpp"
#include "lace/sample.hpp"

namespace lace {

enum class Family : std::uint8_t {
  scientific,
  news,
  dialog,
  medical,
  code,
  poetry,
  financial,
  sports,
  math,
  legal,
};

inline constexpr std::size_t kNumFamilies = 10;
inline constexpr std::size_t kSeqLen = 32;
inline constexpr std::size_t kVocab = 128;

std::string_view family_name(Family f);

struct DomainSpec {
  Family family = Family::scientific;
  std::size_t variant = 0;
  std::size_t label = 0;
  std::uint64_t seed = 0;  // drives variant perturbation of the family grammar
};

// Template grammar for one domain: a keyword lexicon, a weighted set of
// unit emitters (keyword, shared English filler, family-specific fragment),
// and separator/punctuation frequencies. Variant 0 is the base family;
// variants >= 1 replace 30% of the lexicon with words over a variant-specific
// letter set and rescale the punctuation frequencies.
class DomainGrammar {
 public:
  explicit DomainGrammar(const DomainSpec& spec);

  const DomainSpec& spec() const { return spec_; }
  const std::vector<std::string>& lexicon() const { return lexicon_; }

  // Exactly kSeqLen printable characters (plus '\n').
  std::string text(Rng& rng) const;
  Sample sample(Rng& rng) const;

  struct Separator {
    std::string text;
    double weight;
  };

 private:
  void emit_unit(std::string& out, Rng& rng) const;
  std::string fragment(Rng& rng) const;
  const std::string& keyword(Rng& rng) const;

  DomainSpec spec_;
  std::vector<std::string> lexicon_;  // ordered by frequency rank
  std::vector<double> keyword_cdf_;
  std::vector<Separator> separators_;
  double keyword_weight_ = 0.5;
  double filler_weight_ = 0.2;
  double fragment_weight_ = 0.3;
};

// Deterministic in (spec, seed).
std::vector<Sample> generate(const DomainSpec& spec, std::uint64_t seed, std::size_t n);

// Source domains for one training batch: the first round(current_fraction *
// batch_size) entries are the newest domain `current`, the rest are uniform
// over domains 0..current. 1 gives current-only batches, 0 uniform ones.
std::vector<std::size_t> batch_domains(std::size_t current, std::size_t batch_size,
                                       double current_fraction, Rng& rng);

// Ordered domains introduced one per phase.
class DomainSchedule {
 public:
  DomainSchedule(std::vector<DomainSpec> domains, std::size_t phase_length);

  // `num_domains` domains cycling through the families; domain i has family
  // i % 10 and variant i / 10. Labels follow introduction order.
  static DomainSchedule sequential(std::size_t num_domains, std::size_t phase_length,
                                   std::uint64_t seed);

  std::size_t num_domains() const { return domains_.size(); }
  std::size_t phase_length() const { return phase_length_; }
  long total_steps() const { return static_cast<long>(domains_.size() * phase_length_); }
  const std::vector<DomainSpec>& domains() const { return domains_; }
  const DomainGrammar& grammar(std::size_t domain) const { return grammars_.at(domain); }

  // Index of the most recently introduced domain at `step`.
  std::size_t active_domain(long step) const;
  long introduction_step(std::size_t domain) const {
    return static_cast<long>(domain * phase_length_);
  }

  // Throws ScheduleExhausted when step >= total_steps.
  std::vector<Sample> batch(long step, std::size_t batch_size, Rng& rng,
                            double current_fraction) const;

  // Held-out samples for domains 0..up_to_domain, `per_domain` each, drawn
  // from the evaluation seed namespace.
  std::vector<Sample> eval_set(std::size_t up_to_domain, std::size_t per_domain,
                               std::uint64_t seed) const;

 private:
  std::vector<DomainSpec> domains_;
  std::vector<DomainGrammar> grammars_;
  std::size_t phase_length_;
};

// Training and evaluation draws never share a seed.
inline constexpr std::uint64_t kEvalSeedSalt = 0xE7A1'5EED'0000'0001ULL;

// Escapes '\\', '\n' and '\t' so a sample fits on one TSV line.
std::string escape_tsv(std::string_view raw);
std::string to_text(const Sample& s);

}  // namespace lace
