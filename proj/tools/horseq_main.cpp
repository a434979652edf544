// horseq: command line front end for the recursion-scheme toolkit.
//
// Subcommands:
//   check FILE...        parse and sort-check grammars (.hors) or programs (.hochc)
//   tree FILE            print a finite prefix of a grammar's value tree
//   botfree FILE         rewrite a grammar so it never surfaces _bot
//   encode FILE          translate a grammar into its clause program
//   solve FILE           run the coinductive engine on a program's goal
//   equiv FILE FILE      decide whether two grammars produce the same tree
//
// Exit codes: 0 positive verdict (equivalent / solvable), 1 negative verdict,
// 2 undecided, 3 input errors (unreadable, parse, sorts), 4 budget exhaustion,
// 5 internal failures.  Diagnostics go to stderr; results go to stdout.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "horseq/botfree.hpp"
#include "horseq/coengine.hpp"
#include "horseq/encode.hpp"
#include "horseq/equiv.hpp"
#include "horseq/hors.hpp"
#include "horseq/parse.hpp"
#include "horseq/print.hpp"
#include "horseq/report.hpp"

namespace {

// Failure with a settled exit code; caught at the top of main.
struct Fail {
  int code;
  std::string msg;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Fail{3, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

horseq::Hors load_hors(const std::string& path) {
  std::string text = slurp(path);
  try {
    return horseq::parse_hors(text);
  } catch (const horseq::ParseError& e) {
    throw Fail{3, path + ":" + e.what()};
  } catch (const horseq::SortError& e) {
    throw Fail{3, path + ": " + e.what()};
  }
}

horseq::ParsedProgram load_program(const std::string& path) {
  std::string text = slurp(path);
  try {
    return horseq::parse_program(text);
  } catch (const horseq::ParseError& e) {
    throw Fail{3, path + ":" + e.what()};
  } catch (const horseq::SortError& e) {
    throw Fail{3, path + ": " + e.what()};
  }
}

bool program_file(const std::string& path) {
  return path.size() >= 6 && path.compare(path.size() - 6, 6, ".hochc") == 0;
}

// Multi-line payloads become repeated keys so the report stays line-oriented.
void add_lines(horseq::Report& rep, const std::string& key,
               const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) rep.kv(key, line);
}

// Text mode shows the result fields; structured mode shows the whole report
// (schema line, tool line, input echo, exit code) for machine consumption.
void emit(const horseq::Report& rep, bool structured) {
  if (structured) {
    std::cout << rep.render();
    return;
  }
  for (const auto& [k, v] : rep.fields) {
    if (k == "report" || k == "tool" || k == "command" || k == "exit") continue;
    if (k.rfind("input.", 0) == 0) continue;
    std::cout << k << ": " << v << "\n";
  }
}

std::vector<int> parse_schedule(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      size_t used = 0;
      int d = std::stoi(tok, &used);
      if (used != tok.size() || d <= 0) throw Fail{3, ""};
      out.push_back(d);
    } catch (const Fail&) {
      throw Fail{3, "bad --schedule entry '" + tok + "' (want positive ints)"};
    } catch (const std::exception&) {
      throw Fail{3, "bad --schedule entry '" + tok + "' (want positive ints)"};
    }
  }
  if (out.empty()) throw Fail{3, "empty --schedule"};
  return out;
}

int run_check(const std::vector<std::string>& files, bool structured) {
  horseq::Report rep("check");
  for (const std::string& f : files) {
    if (program_file(f)) {
      horseq::ParsedProgram pp = load_program(f);
      rep.input(f, horseq::print_program(pp.program, pp.goal));
    } else {
      horseq::Hors h = load_hors(f);
      rep.input(f, horseq::print_hors(h));
    }
    rep.kv("ok", f);
  }
  rep.kv("exit", 0L);
  emit(rep, structured);
  return 0;
}

int run_tree(const std::string& file, int depth, size_t fuel,
             bool structured) {
  horseq::Hors h = load_hors(file);
  std::string rendered = horseq::print_tree(horseq::generate_prefix(h, depth, fuel));
  if (!structured) {
    std::cout << rendered << "\n";
    return 0;
  }
  horseq::Report rep("tree");
  rep.input("grammar", horseq::print_hors(h));
  rep.kv("depth", static_cast<long>(depth));
  rep.kv("tree", rendered);
  rep.kv("exit", 0L);
  emit(rep, true);
  return 0;
}

int run_botfree(const std::string& file, int stage, size_t max_variants,
                bool structured) {
  horseq::Hors h = load_hors(file);
  horseq::BotfreeStages st = horseq::botfree_transform(h, max_variants);
  const horseq::Hors* pick = &st.result;
  if (stage == 1) pick = &st.stage1;
  if (stage == 2) pick = &st.stage2;
  if (stage == 3) pick = &st.stage3;
  std::string rendered = horseq::print_hors(*pick);
  if (!structured) {
    std::cout << rendered;
    return 0;
  }
  horseq::Report rep("botfree");
  rep.input("grammar", horseq::print_hors(h));
  rep.kv("stage", stage == 0 ? std::string("final") : std::to_string(stage));
  add_lines(rep, "output", rendered);
  rep.kv("exit", 0L);
  emit(rep, true);
  return 0;
}

int run_encode(const std::string& file, bool structured) {
  horseq::Hors h = load_hors(file);
  std::string rendered = horseq::print_program(horseq::encode(h));
  if (!structured) {
    std::cout << rendered;
    return 0;
  }
  horseq::Report rep("encode");
  rep.input("grammar", horseq::print_hors(h));
  add_lines(rep, "output", rendered);
  rep.kv("exit", 0L);
  emit(rep, true);
  return 0;
}

int run_solve(const std::string& file, size_t fuel, bool structured) {
  horseq::ParsedProgram pp = load_program(file);
  if (!pp.goal) throw Fail{3, file + ": no goal section to solve"};
  horseq::SolveOptions so;
  so.max_unfolds = fuel;
  horseq::SolveResult sr = horseq::solve_goal(pp.program, pp.goal, so);

  horseq::Report rep("solve");
  rep.input("program", horseq::print_program(pp.program, pp.goal));
  rep.kv("outcome", horseq::outcome_str(sr.outcome));
  if (!sr.note.empty()) rep.kv("note", sr.note);
  rep.kv("unfolds", static_cast<long>(sr.unfolds));
  rep.kv("closures", static_cast<long>(sr.closures));
  if (sr.outcome == horseq::Outcome::Sat) {
    std::set<std::string> fv;
    horseq::detail::free_tree_vars(pp.goal, {}, fv);
    for (const std::string& v : fv) {
      horseq::Tree t =
          horseq::resolve_graph(sr.answer, horseq::TreeTerm::var(v));
      rep.kv("witness." + v, horseq::print_tree(t));
    }
  }
  int code = sr.outcome == horseq::Outcome::Sat     ? 0
             : sr.outcome == horseq::Outcome::Unsat ? 1
                                                    : 2;
  rep.kv("exit", static_cast<long>(code));
  emit(rep, structured);
  return code;
}

int run_equiv(const std::string& left, const std::string& right,
              const std::string& schedule, size_t fuel, size_t engine_fuel,
              size_t max_variants, bool structured) {
  horseq::Hors a = load_hors(left);
  horseq::Hors b = load_hors(right);
  horseq::EquivOptions eo;
  if (!schedule.empty()) eo.depth_schedule = parse_schedule(schedule);
  eo.prefix_fuel = fuel;
  eo.engine.max_unfolds = engine_fuel;
  eo.max_variants = max_variants;
  horseq::EquivResult r = horseq::decide_equiv(a, b, eo);

  horseq::Report rep("equiv");
  rep.input("left", horseq::print_hors(a));
  rep.input("right", horseq::print_hors(b));
  rep.kv("verdict", horseq::verdict_str(r.verdict));
  rep.kv("reason", r.reason);
  rep.kv("depth", static_cast<long>(r.depth));
  rep.kv("certified", r.certified ? "yes" : "no");
  if (r.verdict == horseq::EquivVerdict::Inequivalent &&
      !r.label_left.empty()) {
    rep.kv("path", horseq::path_str(r.path));
    rep.kv("label.left", r.label_left);
    rep.kv("label.right", r.label_right);
  }
  if (r.engine.unfolds > 0 || !r.engine.note.empty()) {
    rep.kv("engine.outcome", horseq::outcome_str(r.engine.outcome));
    rep.kv("engine.unfolds", static_cast<long>(r.engine.unfolds));
    rep.kv("engine.closures", static_cast<long>(r.engine.closures));
  }
  rep.kv("route.prefix.ms", r.ms_prefix);
  rep.kv("route.engine.ms", r.ms_engine);
  int code = r.verdict == horseq::EquivVerdict::Equivalent     ? 0
             : r.verdict == horseq::EquivVerdict::Inequivalent ? 1
                                                               : 2;
  rep.kv("exit", static_cast<long>(code));
  emit(rep, structured);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recursion scheme equivalence toolkit"};
  app.require_subcommand(1);
  int code = 0;

  std::string format = "text";
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"text", "structured"}))
        ->capture_default_str();
  };
  auto structured = [&] { return format == "structured"; };

  std::vector<std::string> files;
  CLI::App* check = app.add_subcommand("check", "parse and sort-check files");
  check->add_option("files", files, "grammar or program files")->required();
  add_format(check);
  check->callback([&] { code = run_check(files, structured()); });

  std::string file, file2;
  int depth = 4;
  size_t fuel = 1'000'000;
  CLI::App* tree = app.add_subcommand("tree", "print a value-tree prefix");
  tree->add_option("file", file, "grammar file")->required();
  tree->add_option("--depth", depth, "prefix depth")->capture_default_str();
  tree->add_option("--fuel", fuel, "reduction step budget")
      ->capture_default_str();
  add_format(tree);
  tree->callback([&] { code = run_tree(file, depth, fuel, structured()); });

  int stage = 0;
  size_t max_variants = 512;
  CLI::App* botfree =
      app.add_subcommand("botfree", "rewrite away unproductive subtrees");
  botfree->add_option("file", file, "grammar file")->required();
  botfree->add_option("--stage", stage, "stop after stage 1, 2, or 3")
      ->check(CLI::Range(1, 3));
  botfree->add_option("--max-variants", max_variants,
                      "cap on specialized nonterminals")
      ->capture_default_str();
  add_format(botfree);
  botfree->callback(
      [&] { code = run_botfree(file, stage, max_variants, structured()); });

  CLI::App* encode =
      app.add_subcommand("encode", "translate a grammar into clauses");
  encode->add_option("file", file, "grammar file")->required();
  add_format(encode);
  encode->callback([&] { code = run_encode(file, structured()); });

  size_t unfolds = 4096;
  CLI::App* solve = app.add_subcommand("solve", "run the engine on a goal");
  solve->add_option("file", file, "program file with a goal section")
      ->required();
  solve->add_option("--fuel", unfolds, "definition unfolding budget")
      ->capture_default_str();
  add_format(solve);
  solve->callback([&] { code = run_solve(file, unfolds, structured()); });

  std::string schedule;
  size_t engine_fuel = 512;
  CLI::App* equiv =
      app.add_subcommand("equiv", "decide whether two grammars agree");
  equiv->add_option("left", file, "first grammar")->required();
  equiv->add_option("right", file2, "second grammar")->required();
  equiv->add_option("--schedule", schedule,
                    "comma-separated prefix depths (default 2,4,8,16,32,64)");
  equiv->add_option("--fuel", fuel, "reduction step budget per prefix")
      ->capture_default_str();
  equiv->add_option("--engine-fuel", engine_fuel,
                    "unfolding budget for the certificate route")
      ->capture_default_str();
  equiv->add_option("--max-variants", max_variants,
                    "cap on specialized nonterminals")
      ->capture_default_str();
  add_format(equiv);
  equiv->callback([&] {
    code = run_equiv(file, file2, schedule, fuel, engine_fuel, max_variants,
                     structured());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  } catch (const Fail& f) {
    std::cerr << "horseq: error: " << f.msg << "\n";
    return f.code;
  } catch (const horseq::ParseError& e) {
    std::cerr << "horseq: error: " << e.what() << "\n";
    return 3;
  } catch (const horseq::SortError& e) {
    std::cerr << "horseq: error: " << e.what() << "\n";
    return 3;
  } catch (const horseq::CapacityError& e) {
    std::cerr << "horseq: error: " << e.what() << "\n";
    return 4;
  } catch (const horseq::HorsError& e) {
    std::cerr << "horseq: error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "horseq: error: " << e.what() << "\n";
    return 5;
  }
  return code;
}
