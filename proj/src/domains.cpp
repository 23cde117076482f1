#include "lace/domains.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

#include "lace/errors.hpp"

namespace lace {

namespace {

const std::vector<std::string> kFiller = {"the", "of", "and", "to", "in", "a",
                                          "is", "for", "on", "with", "that", "as"};

struct FamilyTemplate {
  std::vector<std::string> lexicon;
  std::vector<DomainGrammar::Separator> separators;
  double keyword_weight;
  double filler_weight;
  double fragment_weight;
};

std::string digits(Rng& rng, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.below(10)));
  return s;
}

std::string one_of(std::initializer_list<const char*> options, Rng& rng) {
  return *(options.begin() + rng.below(options.size()));
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string upper(std::string w) {
  for (auto& c : w) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return w;
}

// Lexicons and punctuation profiles of the ten base families. Each family
// owns a few signature symbols that no other family emits:
//   scientific [ ] ~    news " and Title Case    dialog ? ! : '
//   medical / &         code { } _ =             poetry line breaks
//   financial $ % |     sports @ # -             math + ^ * < >
//   legal ; ( )
FamilyTemplate base_template(Family f) {
  switch (f) {
    case Family::scientific:
      return {{"hypothesis", "glycolysis", "enzyme", "isotope", "phylum", "synthesis", "xylem",
               "oxygen", "polymer", "phenotype", "cytoplasm", "pyruvate", "oxidize", "lymph",
               "zygote", "myosin", "genotype", "hydroxyl", "xenon", "enzymatic"},
              {{" ", 0.45}, {" ~", 0.45}, {". ", 0.10}},
              0.50, 0.05, 0.45};
    case Family::news:
      return {{"Officials", "Reported", "Said", "Announced", "Council", "Election", "Yesterday",
               "Minister", "Senator", "Police", "Residents", "According", "Mayor", "Statement",
               "Governor", "Protest", "Reporters", "Sources", "Capital", "Tuesday"},
              {{" ", 0.50}, {". ", 0.20}, {"\" ", 0.30}},
              0.55, 0.05, 0.40};
    case Family::dialog:
      return {{"hey", "yeah", "lol", "what", "you", "okay", "sure", "thanks", "how", "gonna",
               "wanna", "nope", "yep", "really", "cool", "hmm", "right", "omg", "pls", "wow"},
              {{" ", 0.50}, {"? ", 0.20}, {"! ", 0.18}, {"... ", 0.07}, {": ", 0.05}},
              0.50, 0.10, 0.40};
    case Family::medical:
      return {{"patient", "dose", "chronic", "acute", "diagnosis", "tachycardia", "fever",
               "renal", "cardiac", "lesion", "infusion", "sepsis", "biopsy", "dyspnea",
               "hepatic", "edema", "stable", "pain", "admitted", "oral"},
              {{" ", 0.25}, {" / ", 0.45}, {" & ", 0.30}},
              0.40, 0.05, 0.55};
    case Family::code:
      return {{"return", "int", "void", "const", "auto", "if", "else", "for", "while", "self",
               "def", "struct", "nullptr", "true", "false", "break", "import", "class",
               "static", "size_t"},
              {{" ", 0.35}, {"\n    ", 0.25}, {" {\n", 0.15}, {"}\n", 0.15}, {" = ", 0.10}},
              0.40, 0.00, 0.60};
    case Family::poetry:
      return {{"moon", "mist", "silver", "sea", "soft", "shadow", "whisper", "wind", "wander",
               "willow", "dream", "dusk", "lonely", "rose", "river", "ember", "sorrow", "bloom",
               "starlight", "hollow"},
              {{" ", 0.30}, {"\n", 0.45}, {",\n", 0.25}},
              0.75, 0.10, 0.15};
    case Family::financial:
      return {{"revenue", "EPS", "yoy", "dividend", "bps", "guidance", "margin", "shares",
               "NASDAQ", "earnings", "fiscal", "bond", "yield", "equity", "Q3", "Q4", "ebitda",
               "capex", "hedge", "inflation"},
              {{" ", 0.40}, {" | ", 0.45}, {", ", 0.15}},
              0.40, 0.05, 0.55};
    case Family::sports:
      return {{"goal", "kick", "ball", "football", "fullback", "league", "halftime", "block",
               "keeper", "tackle", "kickoff", "backheel", "dribble", "volley", "lob",
               "goalkeeper", "flank", "foul", "bulk", "kickback"},
              {{" ", 0.20}, {" - ", 0.40}, {" #", 0.40}},
              0.50, 0.05, 0.45};
    case Family::math:
      return {{"let", "then", "sqrt", "sum", "lim", "proof", "thus", "integral", "mod",
               "lemma", "prime", "where", "det", "max", "log", "sin", "cos", "iff", "qed",
               "exp"},
              {{" ", 0.45}, {" > ", 0.20}, {" < ", 0.15}, {" * ", 0.20}},
              0.30, 0.05, 0.65};
    case Family::legal:
      return {{"whereas", "hereinafter", "shall", "herewith", "forthwith", "wherefore", "herein",
               "thereof", "hereby", "whereof", "therefor", "thereto", "wherein", "hereunder",
               "forfeiture", "thereafter", "heretofore", "withheld", "waiver", "warrant"},
              {{" ", 0.15}, {"; ", 0.85}},
              0.40, 0.05, 0.55};
  }
  return {};
}

// Words invented for a variant: letters drawn from a six-letter set chosen by
// the variant seed, so each variant carries its own character signature.
std::string variant_word(const std::string& letters, Rng& rng) {
  const std::size_t len = 6 + rng.below(5);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(letters[rng.below(letters.size())]);
  return w;
}

}  // namespace

std::string_view family_name(Family f) {
  static constexpr std::array<std::string_view, kNumFamilies> names = {
      "scientific", "news", "dialog", "medical", "code",
      "poetry", "financial", "sports", "math", "legal"};
  return names[static_cast<std::size_t>(f)];
}

DomainGrammar::DomainGrammar(const DomainSpec& spec) : spec_(spec) {
  FamilyTemplate t = base_template(spec.family);
  lexicon_ = std::move(t.lexicon);
  separators_ = std::move(t.separators);
  keyword_weight_ = t.keyword_weight;
  filler_weight_ = t.filler_weight;
  fragment_weight_ = t.fragment_weight;
  // Zipf keyword frequencies: the entry at rank r is drawn with weight 1/(r+1).
  double acc = 0.0;
  for (std::size_t r = 0; r < lexicon_.size(); ++r) {
    acc += 1.0 / static_cast<double>(r + 1);
    keyword_cdf_.push_back(acc);
  }

  if (spec.variant == 0) return;

  Rng rng(derive_seed(spec.seed, 0x5A17'0000ULL + spec.variant));
  std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::string letters;
  for (int i = 0; i < 6; ++i) {
    const std::size_t j = rng.below(alphabet.size());
    letters.push_back(alphabet[j]);
    alphabet.erase(j, 1);
  }
  // The redrawn 30% are the most frequent entries.
  const auto n_replace = static_cast<std::size_t>(std::lround(0.3 * static_cast<double>(lexicon_.size())));
  for (std::size_t i = 0; i < n_replace; ++i) lexicon_[i] = variant_word(letters, rng);
  // Space stays the dominant separator; punctuation rates are rescaled.
  for (auto& sep : separators_) {
    if (sep.text != " ") sep.weight *= rng.uniform(0.5, 1.5);
  }
}

const std::string& DomainGrammar::keyword(Rng& rng) const {
  const double u = rng.uniform() * keyword_cdf_.back();
  const auto it = std::upper_bound(keyword_cdf_.begin(), keyword_cdf_.end(), u);
  return lexicon_[std::min<std::size_t>(static_cast<std::size_t>(it - keyword_cdf_.begin()),
                                        lexicon_.size() - 1)];
}

// Family-specific structured fragments. Pieces are appended one statement at
// a time: operands of a chained operator+ are unsequenced, which would make
// the RNG draw order compiler-dependent.
std::string DomainGrammar::fragment(Rng& rng) const {
  std::string s;
  switch (spec_.family) {
    case Family::scientific:
      switch (rng.below(4)) {
        case 0:
          s += digits(rng, 1);
          s += ".";
          s += digits(rng, 1);
          s += "e-";
          s += digits(rng, 1);
          s += " mol";
          break;
        case 1:
          s += "[";
          s += digits(rng, 1 + static_cast<int>(rng.below(2)));
          s += "]";
          break;
        case 2:
          s += "[p~0.0";
          s += digits(rng, 1);
          s += "]";
          break;
        default:
          s += digits(rng, 2);
          s += ".";
          s += digits(rng, 1);
          s += " nm";
      }
      return s;
    case Family::news:
      switch (rng.below(3)) {
        case 0:
          s += capitalize(keyword(rng));
          s += " ";
          s += capitalize(one_of({"ellis", "moreno", "chen", "okafor", "varga"}, rng));
          break;
        case 1:
          s += "\"";
          s += keyword(rng);
          s += " ";
          s += capitalize(pick(kFiller, rng));
          s += "\"";
          break;
        default:
          s += one_of({"Monday", "Wednesday", "Friday", "Oct.", "Sept."}, rng);
          s += " ";
          s += one_of({"Washington", "Berlin", "Ottawa", "Nairobi"}, rng);
      }
      return s;
    case Family::dialog:
      switch (rng.below(3)) {
        case 0:
          s += rng.bernoulli(0.5) ? "A: " : "B: ";
          s += keyword(rng);
          break;
        case 1:
          s += one_of({"i'm", "don't", "can't", "it's", "you're"}, rng);
          s += "!";
          break;
        default:
          s += keyword(rng);
          s += "??";
      }
      return s;
    case Family::medical:
      switch (rng.below(4)) {
        case 0:
          s += "bp 1";
          s += digits(rng, 2);
          s += "/";
          s += digits(rng, 2);
          break;
        case 1:
          s += digits(rng, 1 + static_cast<int>(rng.below(2)));
          s += "mg/";
          s += one_of({"bid", "tid", "qd", "prn"}, rng);
          break;
        case 2:
          s += one_of({"ICU", "CBC", "ECG", "MRI", "IV", "HX"}, rng);
          s += " & ";
          s += one_of({"N/V", "I&D", "S/P", "A&O"}, rng);
          break;
        default:
          s += "pt/";
          s += keyword(rng);
      }
      return s;
    case Family::code:
      switch (rng.below(4)) {
        case 0:
          s += keyword(rng);
          s += "(x_";
          s += digits(rng, 1);
          s += ")";
          break;
        case 1:
          s += "if (is_ok) {";
          break;
        case 2:
          s += "v_i = ";
          s += keyword(rng);
          s += ";";
          break;
        default:
          s += "x_ == nullptr";
      }
      return s;
    case Family::poetry: {
      // Alliterative run: the next lexicon word sharing the first letter.
      const std::string& w = keyword(rng);
      s += w;
      for (const auto& other : lexicon_) {
        if (&other != &w && !other.empty() && other[0] == w[0]) {
          s += " ";
          s += other;
          break;
        }
      }
      return s;
    }
    case Family::financial:
      switch (rng.below(4)) {
        case 0:
          s += "$";
          s += digits(rng, 1);
          s += ",";
          s += digits(rng, 3);
          s += ".";
          s += digits(rng, 2);
          break;
        case 1:
          s += rng.bernoulli(0.5) ? "+" : "-";
          s += digits(rng, 1);
          s += ".";
          s += digits(rng, 1);
          s += "%";
          break;
        case 2:
          s += upper(one_of({"aapl", "msft", "tsla", "jpm", "xom"}, rng));
          break;
        default:
          s += digits(rng, 2);
          s += " bps";
      }
      return s;
    case Family::sports:
      switch (rng.below(3)) {
        case 0:
          s += digits(rng, 1);
          s += "-";
          s += digits(rng, 1);
          break;
        case 1:
          s += "#";
          s += digits(rng, 1);
          s += " ";
          s += keyword(rng);
          break;
        default:
          s += "@";
          s += one_of({"united", "rovers", "city", "athletic"}, rng);
          s += " ";
          s += keyword(rng);
      }
      return s;
    case Family::math:
      switch (rng.below(4)) {
        case 0:
          s += digits(rng, 1);
          s += "x+";
          s += digits(rng, 1);
          s += "<";
          s += digits(rng, 2);
          break;
        case 1:
          s += "y^";
          s += digits(rng, 1);
          s += "+x^";
          s += digits(rng, 1);
          break;
        case 2:
          s += "a+b*";
          s += digits(rng, 1);
          break;
        default:
          s += keyword(rng);
          s += " n>";
          s += digits(rng, 1);
      }
      return s;
    case Family::legal:
      switch (rng.below(3)) {
        case 0:
          s += "clause ";
          s += digits(rng, 1);
          s += "(";
          s += static_cast<char>('a' + rng.below(4));
          s += ")";
          break;
        case 1:
          s += "(";
          s += keyword(rng);
          s += ")";
          break;
        default:
          s += "(shall not)";
      }
      return s;
  }
  return keyword(rng);
}

void DomainGrammar::emit_unit(std::string& out, Rng& rng) const {
  const double total = keyword_weight_ + filler_weight_ + fragment_weight_;
  const double u = rng.uniform() * total;
  if (u < keyword_weight_) {
    out += keyword(rng);
  } else if (u < keyword_weight_ + filler_weight_) {
    out += pick(kFiller, rng);
  } else {
    out += fragment(rng);
  }
  double sep_total = 0.0;
  for (const auto& s : separators_) sep_total += s.weight;
  double r = rng.uniform() * sep_total;
  for (const auto& s : separators_) {
    if (r < s.weight) {
      out += s.text;
      return;
    }
    r -= s.weight;
  }
  out += separators_.back().text;
}

std::string DomainGrammar::text(Rng& rng) const {
  // Start at a random offset into a longer passage so samples do not all
  // open on a unit boundary.
  const std::size_t offset = rng.below(12);
  std::string out;
  while (out.size() < offset + kSeqLen) emit_unit(out, rng);
  return out.substr(offset, kSeqLen);
}

Sample DomainGrammar::sample(Rng& rng) const {
  const std::string t = text(rng);
  Sample s;
  s.label = spec_.label;
  s.tokens.reserve(t.size());
  for (const char c : t) s.tokens.push_back(static_cast<Token>(static_cast<unsigned char>(c) & 0x7F));
  return s;
}

std::vector<Sample> generate(const DomainSpec& spec, std::uint64_t seed, std::size_t n) {
  const DomainGrammar grammar(spec);
  Rng rng(derive_seed(seed, spec.seed ^ (spec.label * 0x100000001B3ULL)));
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(grammar.sample(rng));
  return out;
}

DomainSchedule::DomainSchedule(std::vector<DomainSpec> domains, std::size_t phase_length)
    : domains_(std::move(domains)), phase_length_(phase_length) {
  if (domains_.empty()) throw ConfigError("schedule needs at least one domain");
  if (phase_length_ == 0) throw ConfigError("phase_length must be positive");
  grammars_.reserve(domains_.size());
  for (const auto& d : domains_) grammars_.emplace_back(d);
}

DomainSchedule DomainSchedule::sequential(std::size_t num_domains, std::size_t phase_length,
                                          std::uint64_t seed) {
  std::vector<DomainSpec> specs;
  specs.reserve(num_domains);
  for (std::size_t i = 0; i < num_domains; ++i) {
    DomainSpec s;
    s.family = static_cast<Family>(i % kNumFamilies);
    s.variant = i / kNumFamilies;
    s.label = i;
    s.seed = derive_seed(seed, 0xD0'0000ULL + i);
    specs.push_back(s);
  }
  return DomainSchedule(std::move(specs), phase_length);
}

std::size_t DomainSchedule::active_domain(long step) const {
  if (step < 0 || step >= total_steps()) {
    throw ScheduleExhausted("step " + std::to_string(step) + " outside schedule of " +
                            std::to_string(total_steps()) + " steps");
  }
  return static_cast<std::size_t>(step) / phase_length_;
}

std::vector<std::size_t> batch_domains(std::size_t current, std::size_t batch_size,
                                       double current_fraction, Rng& rng) {
  if (!(current_fraction >= 0.0 && current_fraction <= 1.0)) {
    throw ConfigError("current_fraction must lie in [0, 1]");
  }
  const auto n_current = static_cast<std::size_t>(
      std::llround(current_fraction * static_cast<double>(batch_size)));
  std::vector<std::size_t> out(batch_size, current);
  for (std::size_t i = n_current; i < batch_size; ++i) out[i] = rng.below(current + 1);
  return out;
}

std::vector<Sample> DomainSchedule::batch(long step, std::size_t batch_size, Rng& rng,
                                          double current_fraction) const {
  const auto domains = batch_domains(active_domain(step), batch_size, current_fraction, rng);
  std::vector<Sample> out;
  out.reserve(batch_size);
  for (const std::size_t d : domains) out.push_back(grammars_[d].sample(rng));
  return out;
}

std::vector<Sample> DomainSchedule::eval_set(std::size_t up_to_domain, std::size_t per_domain,
                                             std::uint64_t seed) const {
  if (per_domain == 0) throw ConfigError("per_domain must be >= 1");
  const std::size_t last = std::min(up_to_domain, domains_.size() - 1);
  std::vector<Sample> out;
  out.reserve((last + 1) * per_domain);
  for (std::size_t d = 0; d <= last; ++d) {
    auto part = generate(domains_[d], seed ^ kEvalSeedSalt, per_domain);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::string escape_tsv(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (const char c : raw) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string to_text(const Sample& s) {
  std::string t;
  t.reserve(s.tokens.size());
  for (const Token tok : s.tokens) t.push_back(static_cast<char>(tok));
  return t;
}

}  // namespace lace
