#pragma once

#include <string>
#include <string_view>

namespace lkg {

// Classic Porter (1980) suffix stripper, as published: step 2 uses ABLI->ABLE and
// has no LOGI rule. Input is expected lowercase; words containing anything other
// than a-z are returned unchanged, as are words of one or two letters.
class PorterStemmer {
public:
  std::string operator()(std::string_view word) const {
    if (word.size() <= 2) return std::string(word);
    for (char c : word) {
      if (c < 'a' || c > 'z') return std::string(word);
    }
    State s{std::string(word)};
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    return s.b;
  }

private:
  struct State {
    std::string b;
    int j = 0; // end of the stem preceding a matched suffix

    int k() const { return static_cast<int>(b.size()) - 1; }

    bool cons(int i) const {
      switch (b[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !cons(i - 1);
      default: return true;
      }
    }

    // Number of VC sequences in b[0..j].
    int m() const {
      int n = 0;
      int i = 0;
      for (;;) {
        if (i > j) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
      for (;;) {
        for (;;) {
          if (i > j) return n;
          if (cons(i)) break;
          ++i;
        }
        ++i;
        ++n;
        for (;;) {
          if (i > j) return n;
          if (!cons(i)) break;
          ++i;
        }
        ++i;
      }
    }

    bool vowel_in_stem() const {
      for (int i = 0; i <= j; ++i) {
        if (!cons(i)) return true;
      }
      return false;
    }

    bool double_consonant(int i) const {
      if (i < 1) return false;
      if (b[i] != b[i - 1]) return false;
      return cons(i);
    }

    // consonant-vowel-consonant ending at i, final consonant not w, x or y.
    bool cvc(int i) const {
      if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
      const char ch = b[i];
      return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view suffix) {
      const int len = static_cast<int>(suffix.size());
      if (len > k() + 1) return false;
      if (std::string_view(b).substr(b.size() - suffix.size()) != suffix) return false;
      j = k() - len;
      return true;
    }

    void set_to(std::string_view s) {
      b.resize(static_cast<std::size_t>(j + 1));
      b.append(s);
    }

    void replace_if_measure(std::string_view s) {
      if (m() > 0) set_to(s);
    }

    void step1ab() {
      if (b.back() == 's') {
        if (ends("sses")) {
          b.resize(b.size() - 2);
        } else if (ends("ies")) {
          set_to("i");
        } else if (b[b.size() - 2] != 's') {
          b.pop_back();
        }
      }
      if (ends("eed")) {
        if (m() > 0) b.pop_back();
      } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
        b.resize(static_cast<std::size_t>(j + 1));
        if (ends("at")) {
          set_to("ate");
        } else if (ends("bl")) {
          set_to("ble");
        } else if (ends("iz")) {
          set_to("ize");
        } else if (double_consonant(k())) {
          const char ch = b.back();
          if (ch != 'l' && ch != 's' && ch != 'z') b.pop_back();
        } else {
          j = k();
          if (m() == 1 && cvc(k())) b.push_back('e');
        }
      }
    }

    void step1c() {
      if (ends("y") && vowel_in_stem()) b.back() = 'i';
    }

    void step2() {
      if (b.size() < 2) return;
      switch (b[b.size() - 2]) {
      case 'a':
        if (ends("ational")) { replace_if_measure("ate"); break; }
        if (ends("tional")) { replace_if_measure("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { replace_if_measure("ence"); break; }
        if (ends("anci")) { replace_if_measure("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { replace_if_measure("ize"); break; }
        break;
      case 'l':
        if (ends("abli")) { replace_if_measure("able"); break; }
        if (ends("alli")) { replace_if_measure("al"); break; }
        if (ends("entli")) { replace_if_measure("ent"); break; }
        if (ends("eli")) { replace_if_measure("e"); break; }
        if (ends("ousli")) { replace_if_measure("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { replace_if_measure("ize"); break; }
        if (ends("ation")) { replace_if_measure("ate"); break; }
        if (ends("ator")) { replace_if_measure("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { replace_if_measure("al"); break; }
        if (ends("iveness")) { replace_if_measure("ive"); break; }
        if (ends("fulness")) { replace_if_measure("ful"); break; }
        if (ends("ousness")) { replace_if_measure("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { replace_if_measure("al"); break; }
        if (ends("iviti")) { replace_if_measure("ive"); break; }
        if (ends("biliti")) { replace_if_measure("ble"); break; }
        break;
      default:
        break;
      }
    }

    void step3() {
      switch (b.back()) {
      case 'e':
        if (ends("icate")) { replace_if_measure("ic"); break; }
        if (ends("ative")) { replace_if_measure(""); break; }
        if (ends("alize")) { replace_if_measure("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { replace_if_measure("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { replace_if_measure("ic"); break; }
        if (ends("ful")) { replace_if_measure(""); break; }
        break;
      case 's':
        if (ends("ness")) { replace_if_measure(""); break; }
        break;
      default:
        break;
      }
    }

    void step4() {
      if (b.size() < 2) return;
      bool matched = false;
      switch (b[b.size() - 2]) {
      case 'a': matched = ends("al"); break;
      case 'c': matched = ends("ance") || ends("ence"); break;
      case 'e': matched = ends("er"); break;
      case 'i': matched = ends("ic"); break;
      case 'l': matched = ends("able") || ends("ible"); break;
      case 'n': matched = ends("ant") || ends("ement") || ends("ment") || ends("ent"); break;
      case 'o':
        if (ends("ion") && j >= 0 && (b[j] == 's' || b[j] == 't')) {
          matched = true;
        } else {
          matched = ends("ou");
        }
        break;
      case 's': matched = ends("ism"); break;
      case 't': matched = ends("ate") || ends("iti"); break;
      case 'u': matched = ends("ous"); break;
      case 'v': matched = ends("ive"); break;
      case 'z': matched = ends("ize"); break;
      default: break;
      }
      if (matched && m() > 1) b.resize(static_cast<std::size_t>(j + 1));
    }

    void step5() {
      j = k();
      if (b.back() == 'e') {
        j = k() - 1;
        const int a = m();
        if (a > 1 || (a == 1 && !cvc(k() - 1))) b.pop_back();
      }
      j = k();
      if (b.back() == 'l' && double_consonant(k()) && m() > 1) b.pop_back();
    }
  };
};

inline std::string porter_stem(std::string_view word) { return PorterStemmer{}(word); }

} // namespace lkg
