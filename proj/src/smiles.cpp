#include "moedti/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace moedti {

std::vector<std::vector<int>> MolecularGraph::adjacency() const {
  std::vector<std::vector<int>> adj(atoms.size());
  for (const Bond& b : bonds) {
    adj[b.a].push_back(b.b);
    adj[b.b].push_back(b.a);
  }
  return adj;
}

bool MolecularGraph::connected() const {
  if (atoms.empty()) return false;
  auto adj = adjacency();
  std::vector<char> seen(atoms.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  size_t count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == atoms.size();
}

namespace {

struct RingOpen {
  int atom = -1;
  int bond = 0;  // 0 = unspecified, else BondOrder value
  std::size_t offset = 0;
};

bool is_aromatic_organic(char c) {
  return c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's';
}

// Maximum bond capacity used by the permissive post-parse check.
// Only neutral non-aromatic atoms of these elements are checked; the
// aromatic bond-order convention and charged species are left alone.
int max_valence(const std::string& element) {
  if (element == "B") return 3;
  if (element == "C") return 4;
  if (element == "N") return 5;
  if (element == "O") return 2;
  if (element == "P") return 5;
  if (element == "S") return 6;
  if (element == "F" || element == "Cl" || element == "Br" || element == "I") return 1;
  return -1;  // unchecked
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  MolecularGraph run() {
    if (s_.empty()) throw ParseError("empty-input", 0, "SMILES: empty input");
    g_.source = s_;
    while (i_ < s_.size()) step();
    finish();
    return std::move(g_);
  }

 private:
  const std::string& s_;
  MolecularGraph g_;
  std::size_t i_ = 0;
  int prev_ = -1;
  int pending_bond_ = 0;
  std::size_t pending_bond_offset_ = 0;
  std::vector<int> branch_stack_;
  std::map<int, RingOpen> rings_;

  [[noreturn]] void fail(const char* kind, std::size_t off, const std::string& what) {
    throw ParseError(kind, off,
                     "SMILES parse error (" + std::string(kind) + ") at byte " +
                         std::to_string(off) + ": " + what);
  }

  void add_bond(int a, int b, BondOrder order, std::size_t off) {
    if (a == b) fail("ring-self-bond", off, "bond connects an atom to itself");
    for (const Bond& e : g_.bonds) {
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) {
        fail("duplicate-bond", off, "duplicate bond between atoms " +
                                        std::to_string(a) + " and " + std::to_string(b));
      }
    }
    g_.bonds.push_back({a, b, order});
  }

  void add_atom(AtomNode atom) {
    int idx = static_cast<int>(g_.atoms.size());
    g_.atoms.push_back(std::move(atom));
    if (prev_ >= 0) {
      BondOrder order;
      if (pending_bond_) {
        order = static_cast<BondOrder>(pending_bond_);
      } else if (g_.atoms[idx].aromatic && g_.atoms[prev_].aromatic) {
        order = BondOrder::kAromatic;
      } else {
        order = BondOrder::kSingle;
      }
      add_bond(prev_, idx, order, g_.atoms[idx].offset);
    } else if (pending_bond_) {
      fail("dangling-bond", pending_bond_offset_, "bond symbol before any atom");
    }
    pending_bond_ = 0;
    prev_ = idx;
  }

  void ring_digit(int num, std::size_t off) {
    if (prev_ < 0) fail("dangling-ring", off, "ring closure before any atom");
    auto it = rings_.find(num);
    if (it == rings_.end()) {
      rings_[num] = {prev_, pending_bond_, off};
      pending_bond_ = 0;
      return;
    }
    RingOpen open = it->second;
    rings_.erase(it);
    if (open.bond && pending_bond_ && open.bond != pending_bond_) {
      fail("ring-bond-mismatch", off,
           "ring closure bond order disagrees with its opening");
    }
    int code = open.bond ? open.bond : pending_bond_;
    BondOrder order;
    if (code) {
      order = static_cast<BondOrder>(code);
    } else if (g_.atoms[open.atom].aromatic && g_.atoms[prev_].aromatic) {
      order = BondOrder::kAromatic;
    } else {
      order = BondOrder::kSingle;
    }
    add_bond(open.atom, prev_, order, off);
    pending_bond_ = 0;
  }

  void set_bond(int code, std::size_t off) {
    if (pending_bond_) fail("dangling-bond", off, "two bond symbols in a row");
    pending_bond_ = code;
    pending_bond_offset_ = off;
  }

  void step() {
    const char c = s_[i_];
    if (c >= 'A' && c <= 'Z') {
      std::size_t off = i_;
      // Two-character organic-subset symbols first.
      if (c == 'C' && i_ + 1 < s_.size() && s_[i_ + 1] == 'l') {
        i_ += 2;
        add_atom({"Cl", 0, false, 0, 0, off});
        return;
      }
      if (c == 'B' && i_ + 1 < s_.size() && s_[i_ + 1] == 'r') {
        i_ += 2;
        add_atom({"Br", 0, false, 0, 0, off});
        return;
      }
      if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' || c == 'S' ||
          c == 'F' || c == 'I') {
        ++i_;
        add_atom({std::string(1, c), 0, false, 0, 0, off});
        return;
      }
      fail("unknown-token", off,
           std::string("element '") + c + "' needs brackets outside the organic subset");
    }
    if (c >= 'a' && c <= 'z') {
      if (!is_aromatic_organic(c)) {
        fail("unknown-token", i_, std::string("unexpected character '") + c + "'");
      }
      std::size_t off = i_++;
      add_atom({std::string(1, static_cast<char>(std::toupper(c))), 0, true, 0, 0, off});
      return;
    }
    switch (c) {
      case '-': set_bond(1, i_); ++i_; return;
      case '=': set_bond(2, i_); ++i_; return;
      case '#': set_bond(3, i_); ++i_; return;
      case ':': set_bond(4, i_); ++i_; return;
      case '/':
      case '\\':
        // Directional single bonds: geometry dropped, connectivity kept.
        g_.warnings.push_back("stereo bond at byte " + std::to_string(i_) + " ignored");
        set_bond(1, i_);
        ++i_;
        return;
      case '(':
        if (prev_ < 0) fail("branch-without-atom", i_, "branch opens before any atom");
        branch_stack_.push_back(prev_);
        ++i_;
        return;
      case ')':
        if (branch_stack_.empty()) {
          fail("unmatched-branch-close", i_, "')' without a matching '('");
        }
        if (pending_bond_) {
          fail("dangling-bond", pending_bond_offset_, "bond symbol before ')'");
        }
        prev_ = branch_stack_.back();
        branch_stack_.pop_back();
        ++i_;
        return;
      case '%': {
        if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(s_[i_ + 2]))) {
          fail("unknown-token", i_, "'%' must be followed by two digits");
        }
        int num = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
        std::size_t off = i_;
        i_ += 3;
        ring_digit(num, off);
        return;
      }
      case '[': parse_bracket(); return;
      case '.': fail("multi-fragment", i_, "dot-disconnected SMILES is unsupported");
      default:
        if (c >= '0' && c <= '9') {
          std::size_t off = i_++;
          ring_digit(c - '0', off);
          return;
        }
        fail("unknown-token", i_, std::string("unexpected character '") + c + "'");
    }
  }

  void parse_bracket() {
    const std::size_t open = i_;
    ++i_;  // '['
    auto need = [&](const char* what) {
      if (i_ >= s_.size()) {
        fail("unclosed-bracket", s_.size(),
             std::string("input ends inside a bracket atom (expected ") + what + ")");
      }
    };
    need("element");
    AtomNode atom;
    atom.offset = open;

    if (std::isdigit(static_cast<unsigned char>(s_[i_]))) {
      std::size_t start = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      g_.warnings.push_back("isotope at byte " + std::to_string(start) + " ignored");
      need("element");
    }

    char c = s_[i_];
    if (c == '*') {
      atom.element = "*";
      ++i_;
    } else if (c >= 'a' && c <= 'z') {
      // Aromatic: single letters plus the two-letter se/as.
      if (i_ + 1 < s_.size() && ((c == 's' && s_[i_ + 1] == 'e') ||
                                 (c == 'a' && s_[i_ + 1] == 's'))) {
        atom.element = std::string(1, static_cast<char>(std::toupper(c))) +
                       std::string(1, s_[i_ + 1]);
        i_ += 2;
      } else if (is_aromatic_organic(c)) {
        atom.element = std::string(1, static_cast<char>(std::toupper(c)));
        ++i_;
      } else {
        fail("bad-bracket", i_, std::string("unexpected '") + c + "' in bracket atom");
      }
      atom.aromatic = true;
    } else if (c >= 'A' && c <= 'Z') {
      atom.element = std::string(1, c);
      ++i_;
      if (i_ < s_.size() && s_[i_] >= 'a' && s_[i_] <= 'z') {
        atom.element += s_[i_];
        ++i_;
      }
    } else {
      fail("bad-bracket", i_, std::string("unexpected '") + c + "' in bracket atom");
    }

    need("]");
    if (s_[i_] == '@') {
      std::size_t start = i_;
      ++i_;
      if (i_ < s_.size() && s_[i_] == '@') ++i_;
      g_.warnings.push_back("stereocenter at byte " + std::to_string(start) + " ignored");
      need("]");
    }
    if (s_[i_] == 'H') {
      ++i_;
      need("]");
      if (std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        int h = 0;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
          h = h * 10 + (s_[i_] - '0');
          ++i_;
        }
        atom.explicit_h = h;
      } else {
        atom.explicit_h = 1;
      }
      need("]");
    }
    if (s_[i_] == '+' || s_[i_] == '-') {
      const char sign_char = s_[i_];
      const int sign = sign_char == '+' ? 1 : -1;
      ++i_;
      need("]");
      if (std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        int q = 0;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
          q = q * 10 + (s_[i_] - '0');
          ++i_;
        }
        atom.formal_charge = sign * q;
      } else {
        int q = 1;
        while (i_ < s_.size() && s_[i_] == sign_char) {
          ++q;
          ++i_;
        }
        atom.formal_charge = sign * q;
      }
      need("]");
    }
    if (s_[i_] == ':') {
      std::size_t start = i_;
      ++i_;
      need("]");
      if (!std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        fail("bad-bracket", i_, "atom class ':' must be followed by digits");
      }
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      g_.warnings.push_back("atom class at byte " + std::to_string(start) + " ignored");
      need("]");
    }
    if (s_[i_] != ']') {
      fail("bad-bracket", i_, std::string("unexpected '") + s_[i_] + "' in bracket atom");
    }
    ++i_;
    add_atom(std::move(atom));
  }

  void finish() {
    if (pending_bond_) {
      fail("dangling-bond", s_.size(), "input ends after a bond symbol");
    }
    if (!branch_stack_.empty()) {
      fail("unmatched-branch-open", s_.size(), "unclosed '('");
    }
    if (!rings_.empty()) {
      fail("unclosed-ring", s_.size(),
           "ring bond " + std::to_string(rings_.begin()->first) +
               " opened at byte " + std::to_string(rings_.begin()->second.offset) +
               " is never closed");
    }
    for (const Bond& b : g_.bonds) {
      ++g_.atoms[b.a].degree;
      ++g_.atoms[b.b].degree;
    }
    check_valence();
  }

  void check_valence() {
    std::vector<double> load(g_.atoms.size(), 0.0);
    for (const Bond& b : g_.bonds) {
      double units = b.order == BondOrder::kAromatic
                         ? 1.5
                         : static_cast<double>(static_cast<int>(b.order));
      load[b.a] += units;
      load[b.b] += units;
    }
    for (size_t a = 0; a < g_.atoms.size(); ++a) {
      const AtomNode& atom = g_.atoms[a];
      if (atom.aromatic || atom.formal_charge != 0) continue;
      int cap = max_valence(atom.element);
      if (cap < 0) continue;
      if (load[a] + atom.explicit_h > cap + 1e-9) {
        fail("valence", atom.offset,
             atom.element + " carries " + std::to_string(load[a] + atom.explicit_h) +
                 " bond units but allows " + std::to_string(cap));
      }
    }
  }
};

}  // namespace

MolecularGraph parse_smiles(const std::string& s) { return Parser(s).run(); }

std::vector<double> featurize_atom(const MolecularGraph& g, int atom_idx) {
  if (atom_idx < 0 || atom_idx >= static_cast<int>(g.atoms.size())) {
    throw ContractError("featurize_atom: atom index out of range");
  }
  const AtomNode& a = g.atoms[atom_idx];
  std::vector<double> f(kAtomFeatureDim, 0.0);
  static const char* kElements[] = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"};
  int slot = 10;  // "other" bucket
  for (int e = 0; e < 10; ++e) {
    if (a.element == kElements[e]) {
      slot = e;
      break;
    }
  }
  f[slot] = 1.0;
  f[11 + std::min(a.degree, 5)] = 1.0;
  f[17 + std::clamp(a.formal_charge, -2, 2) + 2] = 1.0;
  f[22] = a.aromatic ? 1.0 : 0.0;
  f[23 + std::min(a.explicit_h, 4)] = 1.0;
  return f;
}

}  // namespace moedti
