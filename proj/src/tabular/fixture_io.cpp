#include "steer/tabular/fixture_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace steer::tabular {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string field;
  while (iss >> field) {
    if (field.front() == '#') break;  // trailing comment
    out.push_back(field);
  }
  return out;
}

double parse_logit(const std::string& s, int line_no) {
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("fixture line " + std::to_string(line_no) +
                ": bad logit \"" + s + "\"");
  }
}

std::string format_logit(double v) {
  if (std::isinf(v)) return "-inf";
  std::ostringstream oss;
  oss.precision(17);
  oss << v;
  return oss.str();
}

}  // namespace

TabularLM parse_fixture(std::istream& in) {
  std::vector<std::string> symbols;
  std::string eos_symbol;
  std::optional<int> order, horizon;
  struct PendingRow {
    std::vector<std::string> context;
    LogitVector logits;
  };
  std::vector<PendingRow> rows;
  std::optional<LogitVector> default_row;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    const std::string& kind = fields[0];

    if (kind == "vocab") {
      symbols.assign(fields.begin() + 1, fields.end());
    } else if (kind == "eos") {
      if (fields.size() != 2) {
        throw Error("fixture line " + std::to_string(line_no) +
                    ": eos takes one symbol");
      }
      eos_symbol = fields[1];
    } else if (kind == "order") {
      order = std::stoi(fields.at(1));
    } else if (kind == "horizon") {
      horizon = std::stoi(fields.at(1));
    } else if (kind == "row" || kind == "default") {
      const std::size_t ctx_fields = (kind == "row") ? 1 : 0;
      if (symbols.empty()) {
        throw Error("fixture line " + std::to_string(line_no) +
                    ": vocab must come before rows");
      }
      if (fields.size() < 1 + ctx_fields + symbols.size()) {
        throw Error("fixture line " + std::to_string(line_no) +
                    ": row is too short");
      }
      PendingRow row;
      const std::size_t logit_start = fields.size() - symbols.size();
      for (std::size_t i = 1; i < logit_start; ++i) {
        if (fields[i] != ".") row.context.push_back(fields[i]);
      }
      for (std::size_t i = logit_start; i < fields.size(); ++i) {
        row.logits.push_back(parse_logit(fields[i], line_no));
      }
      if (kind == "default") {
        default_row = std::move(row.logits);
      } else {
        rows.push_back(std::move(row));
      }
    } else {
      throw Error("fixture line " + std::to_string(line_no) +
                  ": unknown directive \"" + kind + "\"");
    }
  }

  if (symbols.empty()) throw Error("fixture has no vocab line");
  if (!order || !horizon) throw Error("fixture needs order and horizon");

  TokenId eos_id = -1;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == eos_symbol) eos_id = static_cast<TokenId>(i);
  }
  if (eos_id < 0) throw Error("eos symbol not present in vocab");

  Vocab vocab(symbols, eos_id);
  TabularLM model(vocab, *order, *horizon);
  for (auto& row : rows) {
    TokenSeq context;
    for (const std::string& sym : row.context) {
      TokenId id = -1;
      for (TokenId j = 0; j < vocab.size(); ++j) {
        if (vocab.symbol(j) == sym) id = j;
      }
      if (id < 0) throw Error("unknown context symbol \"" + sym + "\"");
      context.push_back(id);
    }
    model.set_row(context, std::move(row.logits));
  }
  if (default_row) model.set_default_row(std::move(*default_row));
  return model;
}

TabularLM load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open fixture file: " + path);
  return parse_fixture(in);
}

void write_fixture(std::ostream& out, const TabularLM& model) {
  const Vocab& vocab = model.vocab();
  out << "vocab";
  for (const std::string& s : vocab.symbols()) out << ' ' << s;
  out << '\n';
  out << "eos " << vocab.symbol(vocab.eos()) << '\n';
  out << "order " << model.order() << '\n';
  out << "horizon " << model.horizon_cap() << '\n';
  for (const auto& [context, logits] : model.rows()) {
    out << "row";
    if (context.empty()) {
      out << " .";
    } else {
      for (TokenId id : context) out << ' ' << vocab.symbol(id);
    }
    for (double v : logits) out << ' ' << format_logit(v);
    out << '\n';
  }
  if (model.default_row()) {
    out << "default";
    for (double v : *model.default_row()) out << ' ' << format_logit(v);
    out << '\n';
  }
}

void save_fixture(const std::string& path, const TabularLM& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open fixture file for write: " + path);
  write_fixture(out, model);
}

}  // namespace steer::tabular
