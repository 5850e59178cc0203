#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "flexbus/milp.hpp"

namespace flexbus::milp {

namespace {

std::string sanitize(const std::string& raw, int index, std::map<std::string, int>& seen) {
  std::string s;
  for (char ch : raw)
    s += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') ? ch : '_';
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) s = "v" + s;
  if (seen.count(s)) s += "_" + std::to_string(index);
  seen[s] = index;
  return s;
}

void write_expr(std::ostream& os, const LinExpr& coeffs, const std::vector<std::string>& names) {
  bool first = true;
  for (auto [j, a] : coeffs) {
    if (a == 0.0) continue;
    if (first) {
      if (a < 0.0) os << "- ";
      first = false;
    } else {
      os << (a < 0.0 ? " - " : " + ");
    }
    double mag = std::abs(a);
    if (mag != 1.0) os << mag << ' ';
    os << names[j];
  }
  if (first) os << "0 " << names[0];
}

}  // namespace

void export_lp(const Model& model, std::ostream& os) {
  std::map<std::string, int> seen;
  std::vector<std::string> names;
  for (int j = 0; j < model.num_variables(); ++j) {
    std::string raw = model.variable(j).name;
    if (raw.empty()) raw = "x" + std::to_string(j);
    names.push_back(sanitize(raw, j, seen));
  }
  os.precision(17);
  os << "Minimize\n obj: ";
  LinExpr obj;
  for (int j = 0; j < model.num_variables(); ++j)
    if (model.objective_coeff(j) != 0.0) obj.push_back({j, model.objective_coeff(j)});
  write_expr(os, obj, names);
  os << "\nSubject To\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const Constraint& c = model.constraint(i);
    os << " c" << i << ": ";
    write_expr(os, c.coeffs, names);
    switch (c.sense) {
      case Sense::le: os << " <= "; break;
      case Sense::ge: os << " >= "; break;
      case Sense::eq: os << " = "; break;
    }
    os << c.rhs << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variable(j);
    if (v.kind == VarKind::binary) continue;
    if (std::isinf(v.lb) && std::isinf(v.ub)) {
      os << ' ' << names[j] << " free\n";
      continue;
    }
    os << ' ';
    if (std::isinf(v.lb))
      os << "-inf";
    else
      os << v.lb;
    os << " <= " << names[j] << " <= ";
    if (std::isinf(v.ub))
      os << "+inf";
    else
      os << v.ub;
    os << "\n";
  }
  bool any_int = false, any_bin = false;
  for (int j = 0; j < model.num_variables(); ++j) {
    any_int = any_int || model.variable(j).kind == VarKind::integer;
    any_bin = any_bin || model.variable(j).kind == VarKind::binary;
  }
  if (any_int) {
    os << "Generals\n";
    for (int j = 0; j < model.num_variables(); ++j)
      if (model.variable(j).kind == VarKind::integer) os << ' ' << names[j] << "\n";
  }
  if (any_bin) {
    os << "Binaries\n";
    for (int j = 0; j < model.num_variables(); ++j)
      if (model.variable(j).kind == VarKind::binary) os << ' ' << names[j] << "\n";
  }
  os << "End\n";
}

void export_lp_file(const Model& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::io_error, "cannot open '" + path + "' for writing");
  export_lp(model, f);
  if (!f) throw Error(Errc::io_error, "write to '" + path + "' failed");
}

namespace {

struct Token {
  enum Kind { name, number, op, eof } kind = eof;
  std::string text;
  double value = 0.0;
};

std::vector<Token> tokenize(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  std::string src = ss.str();
  std::vector<Token> out;
  std::size_t pos = 0;
  while (pos < src.size()) {
    char c = src[pos];
    if (c == '\\') {
      while (pos < src.size() && src[pos] != '\n') ++pos;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
      continue;
    }
    if (c == '<' || c == '>' || c == '=') {
      std::size_t start = pos++;
      if (pos < src.size() && src[pos] == '=') ++pos;
      out.push_back({Token::op, src.substr(start, pos - start), 0.0});
      continue;
    }
    if (c == '+' || c == '-' || c == ':') {
      ++pos;
      out.push_back({Token::op, std::string(1, c), 0.0});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[pos + 1])))) {
      std::size_t start = pos;
      while (pos < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.' ||
              src[pos] == 'e' || src[pos] == 'E' ||
              ((src[pos] == '+' || src[pos] == '-') && pos > start &&
               (src[pos - 1] == 'e' || src[pos - 1] == 'E'))))
        ++pos;
      std::string t = src.substr(start, pos - start);
      out.push_back({Token::number, t, std::stod(t)});
      continue;
    }
    std::size_t start = pos;
    while (pos < src.size() && !std::isspace(static_cast<unsigned char>(src[pos])) &&
           std::string("+-<>=:\\").find(src[pos]) == std::string::npos)
      ++pos;
    out.push_back({Token::name, src.substr(start, pos - start), 0.0});
  }
  out.push_back({});
  return out;
}

bool ieq(const std::string& a, const char* b) {
  std::string t;
  for (char c : a) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return t == b;
}

enum class Section { preamble, objective, constraints, bounds, generals, binaries, done };

bool section_keyword(const Token& t, Section& out, double& obj_sign) {
  if (t.kind != Token::name) return false;
  const std::string& w = t.text;
  if (ieq(w, "minimize") || ieq(w, "min") || ieq(w, "minimise")) {
    out = Section::objective;
    obj_sign = 1.0;
    return true;
  }
  if (ieq(w, "maximize") || ieq(w, "max") || ieq(w, "maximise")) {
    out = Section::objective;
    obj_sign = -1.0;
    return true;
  }
  if (ieq(w, "subject") || ieq(w, "st") || ieq(w, "s.t.")) {
    out = Section::constraints;
    return true;
  }
  if (ieq(w, "bounds") || ieq(w, "bound")) {
    out = Section::bounds;
    return true;
  }
  if (ieq(w, "generals") || ieq(w, "general") || ieq(w, "integers") || ieq(w, "integer") ||
      ieq(w, "gen")) {
    out = Section::generals;
    return true;
  }
  if (ieq(w, "binaries") || ieq(w, "binary") || ieq(w, "bin")) {
    out = Section::binaries;
    return true;
  }
  if (ieq(w, "end")) {
    out = Section::done;
    return true;
  }
  return false;
}

bool inf_name(const std::string& s) {
  return ieq(s, "inf") || ieq(s, "infinity") || ieq(s, "+inf") || ieq(s, "1e30");
}

}  // namespace

Model import_lp(std::istream& is) {
  std::vector<Token> toks = tokenize(is);
  std::size_t i = 0;
  Model model;
  std::map<std::string, int> ids;
  auto var_of = [&](const std::string& name) {
    auto it = ids.find(name);
    if (it != ids.end()) return it->second;
    int id = model.add_continuous(name, 0.0, kInf);
    ids[name] = id;
    return id;
  };
  double obj_sign = 1.0;
  Section sec = Section::preamble;

  auto at_section = [&](Section& ns) {
    double sign_tmp = obj_sign;
    if (section_keyword(toks[i], ns, sign_tmp)) {
      if (ns == Section::objective) obj_sign = sign_tmp;
      if (ieq(toks[i].text, "subject")) ++i;  // skip the following 'to'
      ++i;
      return true;
    }
    return false;
  };

  // expr := [label ':'] terms ; returns at the sense token or section break
  auto parse_terms = [&](LinExpr& expr) {
    double sign = 1.0;
    double coeff = 1.0;
    bool have_coeff = false;
    while (true) {
      const Token& t = toks[i];
      if (t.kind == Token::eof) return;
      Section ns;
      double s_tmp = 1.0;
      if (t.kind == Token::name && section_keyword(t, ns, s_tmp)) return;
      if (t.kind == Token::op) {
        if (t.text == "-") {
          sign = -sign;
          ++i;
          continue;
        }
        if (t.text == "+") {
          ++i;
          continue;
        }
        return;  // sense or ':' handled by the caller
      }
      if (t.kind == Token::number) {
        coeff = t.value;
        have_coeff = true;
        ++i;
        continue;
      }
      // name: either a label (if followed by ':') or a variable
      if (toks[i + 1].kind == Token::op && toks[i + 1].text == ":") {
        i += 2;
        expr.clear();
        sign = 1.0;
        coeff = 1.0;
        have_coeff = false;
        continue;
      }
      expr.push_back({var_of(t.text), sign * (have_coeff ? coeff : 1.0)});
      sign = 1.0;
      coeff = 1.0;
      have_coeff = false;
      ++i;
    }
  };

  while (toks[i].kind != Token::eof && sec != Section::done) {
    Section ns;
    if (at_section(ns)) {
      sec = ns;
      continue;
    }
    switch (sec) {
      case Section::objective: {
        LinExpr expr;
        parse_terms(expr);
        for (auto [j, a] : expr) model.add_objective(j, obj_sign * a);
        break;
      }
      case Section::constraints: {
        LinExpr expr;
        parse_terms(expr);
        if (toks[i].kind != Token::op) {
          ++i;
          break;
        }
        std::string op = toks[i].text;
        ++i;
        Sense sense = (op[0] == '<') ? Sense::le : (op[0] == '>') ? Sense::ge : Sense::eq;
        double rsign = 1.0;
        while (toks[i].kind == Token::op && (toks[i].text == "-" || toks[i].text == "+")) {
          if (toks[i].text == "-") rsign = -rsign;
          ++i;
        }
        if (toks[i].kind != Token::number)
          throw Error(Errc::parse_error, "lp import: expected numeric rhs");
        double rhs = rsign * toks[i].value;
        ++i;
        if (!expr.empty()) model.add_constraint("", expr, sense, rhs);
        break;
      }
      case Section::bounds: {
        // forms: [num <=] var [<= num] | var >= num | var = num | var free
        double lead = 0.0;
        bool have_lead = false;
        double sgn = 1.0;
        while (toks[i].kind == Token::op && (toks[i].text == "-" || toks[i].text == "+")) {
          if (toks[i].text == "-") sgn = -sgn;
          ++i;
        }
        if (toks[i].kind == Token::number || (toks[i].kind == Token::name && inf_name(toks[i].text))) {
          lead = (toks[i].kind == Token::number ? toks[i].value : kInf) * sgn;
          have_lead = true;
          ++i;
          if (toks[i].kind == Token::op && toks[i].text[0] == '<') ++i;
        }
        if (toks[i].kind != Token::name) {
          ++i;
          break;
        }
        int id = var_of(toks[i].text);
        ++i;
        double lb = model.variable(id).lb, ub = model.variable(id).ub;
        if (have_lead) lb = lead;
        if (toks[i].kind == Token::name && ieq(toks[i].text, "free")) {
          lb = -kInf;
          ub = kInf;
          ++i;
        } else if (toks[i].kind == Token::op &&
                   (toks[i].text[0] == '<' || toks[i].text[0] == '>' || toks[i].text == "=")) {
          std::string op = toks[i].text;
          ++i;
          double s2 = 1.0;
          while (toks[i].kind == Token::op && (toks[i].text == "-" || toks[i].text == "+")) {
            if (toks[i].text == "-") s2 = -s2;
            ++i;
          }
          double val;
          if (toks[i].kind == Token::number)
            val = s2 * toks[i].value;
          else if (toks[i].kind == Token::name && inf_name(toks[i].text))
            val = s2 * kInf;
          else
            throw Error(Errc::parse_error, "lp import: malformed bound");
          ++i;
          if (op[0] == '<')
            ub = val;
          else if (op[0] == '>')
            lb = val;
          else
            lb = ub = val;
        }
        model.set_variable_bounds(id, lb, ub);
        break;
      }
      case Section::generals:
      case Section::binaries: {
        if (toks[i].kind == Token::name)
          model.set_variable_kind(var_of(toks[i].text),
                                  sec == Section::generals ? VarKind::integer : VarKind::binary);
        ++i;
        break;
      }
      default:
        ++i;
        break;
    }
  }
  return model;
}

Model import_lp_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::io_error, "cannot open '" + path + "'");
  return import_lp(f);
}

}  // namespace flexbus::milp
