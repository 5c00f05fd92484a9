#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hmk/approximation.hpp"
#include "hmk/error.hpp"
#include "hmk/gallery.hpp"
#include "hmk/harmonic.hpp"
#include "hmk/transfer.hpp"

namespace fs = std::filesystem;
using namespace hmk;

namespace {

constexpr const char* kCsvSchema = "# hmk csv v1";
constexpr const char* kCsvHeader = "engine,domain,rank,x,target,value,error,seed";

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw input_error("FileNotFound", "cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// State of one invocation; becomes the run manifest.
struct Run {
  std::vector<std::string> args;
  fs::path out = ".";
  std::uint64_t seed = 1;
  double tol = 1e-3;
  int rank = 0;
  std::uint64_t budget = 64;
  std::string engine = "grid";
  std::uint64_t samples = 20000;
  int threads = 1;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // name, digest
  std::vector<std::string> rows;

  void input(const fs::path& p) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) inputs.emplace_back(f.string(), fnv1a(slurp(f)));
    } else {
      inputs.emplace_back(p.string(), fnv1a(slurp(p)));
    }
  }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(out);
    std::ofstream(out / name, std::ios::binary) << content;
    outputs.emplace_back(name, fnv1a(content));
  }

  void row(const std::string& engine_name, const std::string& domain, int r, const std::string& x,
           const std::string& target, double value, double error, std::uint64_t s) {
    rows.push_back(engine_name + "," + domain + "," + std::to_string(r) + "," + x + "," + target +
                   "," + fmt(value) + "," + fmt(error) + "," + std::to_string(s));
  }

  void flush_csv(const std::string& name) {
    std::string text = std::string(kCsvSchema) + "\n" + kCsvHeader + "\n";
    for (const auto& r : rows) text += r + "\n";
    std::cout << text;
    write(name + ".csv", text);
    flush_manifest(name);
  }

  void flush_manifest(const std::string& name) {
    nlohmann::ordered_json m;
    m["schema"] = "hmk run-manifest v1";
    m["command"] = args;
    m["config"] = {{"tol", tol},         {"rank", rank},       {"budget", budget},
                   {"seed", seed},       {"engine", engine},   {"samples", samples},
                   {"threads", threads}};
    for (const auto& [p, d] : inputs) m["inputs"].push_back({{"path", p}, {"fnv1a64", d}});
    for (const auto& [p, d] : outputs) m["outputs"].push_back({{"name", p}, {"fnv1a64", d}});
    std::ofstream(out / (name + ".manifest.json")) << m.dump(2) << "\n";
  }
};

std::pair<double, double> parse_pair(const std::string& s) {
  const auto c = s.find(',');
  if (c == std::string::npos) throw input_error("ParseError", "expected a,b but got " + s);
  try {
    return {std::stod(s.substr(0, c)), std::stod(s.substr(c + 1))};
  } catch (const std::exception&) {
    throw input_error("ParseError", "bad number pair " + s);
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  } catch (const std::exception&) {
    throw input_error("ParseError", "bad number list " + s);
  }
  return v;
}

Dyadic parse_dyadic(const std::string& s) {
  const auto slash = s.find("/2^");
  if (slash == std::string::npos) return Dyadic::from_parts(std::stoll(s), 0);
  return Dyadic::from_parts(std::stoll(s.substr(0, slash)), std::stoi(s.substr(slash + 3)));
}

std::string xs(double a, double b) { return fmt(a) + ";" + fmt(b); }

// Test functions: const:c, coord:i, cone:qx,qy,c,s,delta, sqdist:qx,qy.
TestFunction parse_function(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const auto v = colon == std::string::npos ? std::vector<double>{} : parse_list(spec.substr(colon + 1));
  auto need = [&](std::size_t k) {
    if (v.size() != k) throw input_error("ParseError", "wrong parameter count in " + spec);
  };
  if (kind == "const") return need(1), TestFunction::constant(v[0]);
  if (kind == "coord") return need(1), TestFunction::coordinate(static_cast<int>(v[0]));
  if (kind == "cone") return need(5), TestFunction::cone(v[0], v[1], v[2], v[3], v[4]);
  if (kind == "sqdist") return need(2), TestFunction::squared_distance(v[0], v[1]);
  throw input_error("ParseError", "unknown test function " + spec);
}

// Domains: a .dp file, "square", "disk:<rank>" or "omega0:<rank>".
DyadicPolygon load_domain(Run& run, const std::string& spec) {
  if (spec == "square") return DyadicPolygon::unit_box(2);
  const auto colon = spec.find(':');
  if (colon != std::string::npos && !fs::exists(spec)) {
    const std::string kind = spec.substr(0, colon);
    const int r = std::stoi(spec.substr(colon + 1));
    if (kind == "disk") return gallery::rasterize(gallery::Region({}, "disk"), r, {0, 0});
    if (kind == "omega0") return gallery::build_omega0(r);
    throw input_error("ParseError", "unknown domain " + spec);
  }
  run.input(spec);
  return load_polygon(spec);
}

DomainEnumeration load_domains(Run& run, const std::string& spec) {
  if (spec.rfind("omega0:", 0) == 0 && !fs::exists(spec)) {
    const int r = std::stoi(spec.substr(7));
    std::vector<DyadicPolygon> v;
    for (int m = 3; m <= r; ++m) v.push_back(gallery::build_omega0(m));
    return DomainEnumeration::from_list(EnumerationKind::InteriorExhaustion, std::move(v));
  }
  if (fs::is_directory(spec)) {
    run.input(spec);
    return load_enumeration(spec, EnumerationKind::InteriorExhaustion);
  }
  return DomainEnumeration::from_list(EnumerationKind::InteriorExhaustion, {load_domain(run, spec)});
}

// Boundary pieces for "half:x<c" / "half:y<c": outline segments split at c.
std::vector<BoundaryPiece> half_pieces(const DyadicPolygon& p, const std::string& spec) {
  if (spec.size() < 8 || (spec[5] != 'x' && spec[5] != 'y') || spec[6] != '<')
    throw input_error("ParseError", "half target must be half:x<c or half:y<c");
  const int axis = spec[5] == 'x' ? 0 : 1;
  const Dyadic c = Dyadic::round_of(std::stod(spec.substr(7)), 40);
  BoundaryPiece lo{spec, {}}, hi{"rest", {}};
  for (const auto& s : polygon_outline_exact(p)) {
    if (s.hi[axis] <= c) {
      lo.segments.push_back(s);
    } else if (s.lo[axis] >= c) {
      hi.segments.push_back(s);
    } else {
      DyadicBox a = s, b = s;
      a.hi[axis] = c;
      b.lo[axis] = c;
      lo.segments.push_back(a);
      hi.segments.push_back(b);
    }
  }
  return {lo, hi};
}

bool on_piece(const BoundaryPiece& piece, double a, double b) {
  constexpr double eps = 1e-9;
  for (const auto& s : piece.segments)
    if (s.lo[0].to_double() - eps <= a && a <= s.hi[0].to_double() + eps &&
        s.lo[1].to_double() - eps <= b && b <= s.hi[1].to_double() + eps)
      return true;
  return false;
}

MeasureOptions measure_options(const Run& run) {
  MeasureOptions o;
  o.seed = run.seed;
  if (run.rank > 0) o.grid.max_rank = run.rank;
  return o;
}

bool use_grid(const Run& r) { return r.engine == "grid" || r.engine == "both"; }
bool use_wos(const Run& r) { return r.engine == "wos" || r.engine == "both"; }

// ---------------------------------------------------------------------------
// Verbs

int cmd_measure(Run& run, const std::string& domain, const std::string& xstr,
                const std::string& target, int n) {
  const DyadicPolygon p = load_domain(run, domain);
  const auto [xa, xb] = parse_pair(xstr);
  const RationalPoint x = RationalPoint::from_doubles(xa, xb, 40);
  const std::string dname = fs::path(domain).filename().string();
  const std::string xcol = xs(xa, xb);
  const auto opts = measure_options(run);

  if (target.rfind("fn:", 0) == 0) {
    const TestFunction f = parse_function(target.substr(3));
    if (use_grid(run)) {
      const Estimate e = harmonic_measure_polygon(p, x, f, n, opts);
      run.row("grid", dname, p.rank(), xcol, target, e.value, e.error, run.seed);
    }
    if (use_wos(run)) {
      const WosResult w = wos_estimate(p, x, f.evaluator(), run.samples, run.seed, f.lip_bound());
      run.row("wos", dname, p.rank(), xcol, target, w.mean, w.radius, run.seed);
    }
  } else {
    std::vector<BoundaryPiece> pieces;
    std::size_t shown = 0;
    if (target == "sides") {
      pieces = rectangle_sides(p);
      shown = pieces.size();
    } else if (target.rfind("side:", 0) == 0) {
      for (auto& s : rectangle_sides(p))
        if ("side:" + s.label == target) pieces.push_back(s);
      if (pieces.empty()) throw input_error("ParseError", "unknown side in " + target);
      shown = 1;
    } else if (target.rfind("half:", 0) == 0) {
      pieces = half_pieces(p, target);
      shown = 1;
    } else {
      throw input_error("ParseError", "unknown target " + target);
    }
    auto label = [&](std::size_t i) {
      return pieces[i].label.rfind("half:", 0) == 0 ? pieces[i].label : "side:" + pieces[i].label;
    };
    if (use_grid(run)) {
      auto o = opts;
      o.wos_check = false;
      const auto enc = exit_distribution(p, x, pieces, n, o);
      for (std::size_t i = 0; i < shown; ++i)
        run.row("grid", dname, p.rank(), xcol, label(i), (enc[i].lo + enc[i].hi) / 2,
                (enc[i].hi - enc[i].lo) / 2, run.seed);
    }
    if (use_wos(run)) {
      const auto index = polygon_boundary_index(p);
      const Vec2 start{xa, xb};
      for (std::size_t i = 0; i < shown; ++i) {
        const auto m = wos_mass(
            *index, start, [&](double a, double b) { return on_piece(pieces[i], a, b); },
            run.samples, run.seed);
        run.row("wos", dname, p.rank(), xcol, label(i), m.mean, std::max(m.upper - m.mean, m.mean - m.lower),
                run.seed);
      }
    }
  }
  run.flush_csv("measure");
  return 0;
}

int cmd_transfer(Run& run, const std::string& domains, const std::string& x0s,
                 const std::string& x1s, const std::string& fspec, int n) {
  const DomainEnumeration dom = load_domains(run, domains);
  const auto [a0, b0] = parse_pair(x0s);
  const auto [a1, b1] = parse_pair(x1s);
  const auto x0 = PointOracle::of_doubles(a0, b0), x = PointOracle::of_doubles(a1, b1);
  const TestFunction f = parse_function(fspec);
  const Connector conn = find_connector(dom, x0, x);
  // Omega: component of x0 in the union of the listed members.
  std::optional<DyadicPolygon> all;
  for (std::uint64_t k = 1;; ++k) {
    auto p = dom(k);
    if (!p) break;
    all = all ? polygon_union(*all, *p) : *p;
  }
  const auto comp = leaf_component(*all, conn.x0);
  const DyadicPolygon omega = DyadicPolygon::from_leaves(2, all->rank(), comp, true);
  const PolygonMeasure mu0(omega, conn.x0);
  const std::string dname = fs::path(domains).filename().string();
  const std::string xcol = xs(a1, b1);
  if (use_grid(run)) {
    TransferOptions opts;
    opts.search_budget = run.budget;
    const TransferResult res = transfer_measure(mu0, conn, x, f, n, opts);
    const HarnackBound hb = harnack_chain(conn, conn.x0, conn.x);
    std::ostringstream led;
    led.precision(17);
    led << "# hmk transfer ledger v1\n";
    led << "n " << n << "\ncontract 2^-n " << std::ldexp(1.0, -n) << "\n";
    led << "C (tau) " << res.tau << "\nchain_steps " << res.chain_steps << "\n";
    led << "k_n " << res.k << "\nnet_level " << res.net_level << "\n";
    led << "member_rank " << res.member_rank << "\nmember_cubes " << res.member_cubes << "\n";
    led << "boundary_mass " << res.boundary_mass << " < " << std::ldexp(1.0, -res.k - 1) << "\n";
    led << "harnack_term " << res.harnack_term << " <= " << std::ldexp(1.0, -n - 2) << "\n";
    led << "member_estimate " << res.member_estimate.value << " +- " << res.member_estimate.error
        << "\n";
    led << "value " << res.value << " +- " << res.error << "\n";
    std::cerr << led.str();
    run.write("transfer-ledger.txt", led.str());
    run.write("connector.txt", connector_manifest(conn, hb));
    run.row("transfer", dname, res.member_rank, xcol, "fn:" + fspec, res.value, res.error, run.seed);
  }
  if (use_wos(run)) {
    const WosResult w = wos_estimate(omega, conn.x, f.evaluator(), run.samples, run.seed, f.lip_bound());
    run.row("wos", dname, omega.rank(), xcol, "fn:" + fspec, w.mean, w.radius, run.seed);
  }
  run.flush_csv("transfer");
  return 0;
}

int cmd_approx(Run& run, const std::string& domain, const std::string& xstr, int n) {
  const DyadicPolygon p = load_domain(run, domain);
  const auto [a, b] = parse_pair(xstr);
  const RationalPoint x = RationalPoint::from_doubles(a, b, 40);
  const PolygonMeasure mu(p, x);
  SearchOptions opts;
  opts.budget = std::max<std::uint64_t>(run.budget, 1);
  const SearchRecord rec = harmonic_approx_search(mu, x, nullptr, n, opts);
  run.write("approx-n" + std::to_string(n) + ".txt", approximation_manifest(rec, x));
  run.row("grid", fs::path(domain).filename().string(), rec.rank, xs(a, b),
          "net-level-" + std::to_string(rec.net_level), rec.max_gap, rec.boundary_mass, run.seed);
  run.flush_csv("approx");
  return 0;
}

int cmd_verify(Run& run, const std::string& manifest, const std::string& domain) {
  run.input(manifest);
  const std::string text = slurp(manifest);
  std::istringstream in(text);
  std::string line;
  std::optional<RationalPoint> x;
  int n = -1;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "x") {
      std::string a, b;
      ls >> a >> b;
      RationalPoint p = RationalPoint::zeros(2);
      p[0] = parse_dyadic(a);
      p[1] = parse_dyadic(b);
      x = p;
    } else if (key == "n") {
      ls >> n;
    }
  }
  const auto start = text.find("dyadic-polygon");
  if (!x || n < 0 || start == std::string::npos)
    throw input_error("ParseError", "not an approximation manifest: " + manifest);
  const DyadicPolygon p = read_polygon(text.substr(start));
  const DyadicPolygon omega = load_domain(run, domain);
  const PolygonMeasure ref(omega, *x);
  const ConditionReport rep = verify_harmonic_approx(p, ref, *x, nullptr, n);
  std::cout << (rep.ok() ? "PASS" : "FAIL") << " n=" << n << " contains=" << rep.contains
            << " net_ok=" << rep.net_ok << " (max_gap " << fmt(rep.max_gap) << ", " << rep.net_size
            << " functions) mass_ok=" << rep.mass_ok << " (" << fmt(rep.boundary_mass) << ")\n";
  return rep.ok() ? 0 : 3;
}

int cmd_gallery_build(Run& run, const std::string& what, int n, const std::string& stub,
                      std::size_t stage) {
  using namespace gallery;
  const int rank = run.rank > 0 ? run.rank : 7;
  std::string name;
  Region region;
  std::optional<DyadicPolygon> raster;
  if (what == "omega0") {
    name = "omega0-r" + std::to_string(rank);
    region = omega0_region(rank);
    raster = build_omega0(rank, std::max(rank, 9));
  } else if (what == "E") {
    name = "E" + std::to_string(n) + "-r" + std::to_string(rank);
    region = e_region(n);
    raster = rasterize(region, rank, {x_point(n), 0});
  } else if (what == "D") {
    name = "D" + std::to_string(n) + "-r" + std::to_string(rank);
    region = d_region(n);
    raster = rasterize(region, rank, {0, 0});
  } else if (what == "A" || what == "star" || what == "nonregular") {
    const auto B = EnumerableSetStub::parse(stub);
    StarOptions o;
    o.rank = rank;
    o.wos = {run.samples, run.seed};
    const std::size_t st = stage ? stage : std::min<std::size_t>(B.revealed(), 2);
    const auto s = what == "star" ? build_star_domain(B, st, o) : build_non_regular_example(B, st, o);
    name = what + "-s" + std::to_string(st) + "-r" + std::to_string(rank);
    region = s.region;
    raster = s.raster;
    std::ostringstream os;
    os.precision(17);
    os << "n,k,radius_index,r,ell,gap_half,d,e,close_bound,close_target\n";
    for (const auto& e : s.entries)
      os << e.n << "," << e.k << "," << e.radius_index << "," << e.r << "," << e.ell << ","
         << e.gap_half << "," << e.d << "," << e.e << "," << e.close_bound << "," << e.close_target
         << "\n";
    run.write(name + "-entries.csv", os.str());
  } else {
    throw input_error("ParseError", "unknown gallery domain " + what);
  }
  run.write(name + ".dp", write_polygon(*raster));
  run.write(name + ".svg", render_svg(&*raster, region, name));
  run.flush_manifest("gallery-build");
  std::cout << "wrote " << (run.out / (name + ".dp")).string() << " and " << name << ".svg ("
            << raster->leaves().size() << " leaves)\n";
  return 0;
}

int cmd_gallery_verify(Run& run, const std::string& id, int n, int k) {
  const auto rep = gallery::verify_inequality(id, n, k, {run.samples, run.seed});
  std::cout << gallery::format_report(rep);
  run.write("verify-" + id + ".csv", gallery::report_csv_header() + "\n" + gallery::report_csv_row(rep) + "\n");
  run.flush_manifest("verify-" + id);
  return 0;
}

int cmd_gallery_separation(Run& run, const std::string& stub, int n, std::size_t stage) {
  const auto B = gallery::EnumerableSetStub::parse(stub);
  const std::size_t st = stage ? stage : (B.finite() ? B.revealed() : std::min<std::size_t>(B.revealed(), 2));
  const auto rep = gallery::separation_demo(B, n, st, {run.samples, run.seed});
  std::cout << rep.verdict << " n=" << n << " stage=" << st << " value in [" << fmt(rep.lhs_lo) << ", "
            << fmt(rep.lhs_hi) << "] " << rep.relation << " " << fmt(rep.rhs) << " (l_n="
            << rep.certificates.at("ell_n") << ")\n";
  run.write("separation-n" + std::to_string(n) + ".txt", gallery::format_report(rep));
  run.write("separation-n" + std::to_string(n) + ".csv",
            gallery::report_csv_header() + "\n" + gallery::report_csv_row(rep) + "\n");
  run.flush_manifest("separation-n" + std::to_string(n));
  return 0;
}

int run_args(std::vector<std::string> args);

int cmd_rerun(const std::string& manifest, const std::string& out) {
  const auto m = nlohmann::json::parse(slurp(manifest));
  std::vector<std::string> args = m.at("command").get<std::vector<std::string>>();
  // Replace the output directory, keep everything else.
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--out") args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
  if (!out.empty()) {
    args.push_back("--out");
    args.push_back(out);
  }
  return run_args(args);
}

int run_args(std::vector<std::string> args) {
  Run run;
  run.args = args;
  if (const char* t = std::getenv("HMK_THREADS")) {
    try {
      run.threads = std::max(1, std::stoi(t));
    } catch (const std::exception&) {
      std::cerr << "HMK_THREADS must be a positive integer\n";
      return 2;
    }
  }

  CLI::App app{"Harmonic measures of dyadic polygon domains", "hmk"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string out = ".";
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", run.seed, "walk seed");
  app.add_option("--tol", run.tol, "tolerance");
  app.add_option("--rank", run.rank, "rank (grid ceiling or raster rank)");
  app.add_option("--budget", run.budget, "search budget");
  app.add_option("--samples", run.samples, "walks per estimate");
  app.add_option("--engine", run.engine, "grid, wos or both")->check(CLI::IsMember({"grid", "wos", "both"}));

  std::string domain, x = "0.5,0.5", x0 = "0.5,0.5", target = "sides", fspec = "coord:0", manifest;
  std::string stub = "prefix:2,5", id, what;
  int n = 4, k = 0;
  std::size_t stage = 0;

  auto* measure = app.add_subcommand("measure", "harmonic measure of a target from a point");
  measure->add_option("domain", domain, "domain file, square, disk:<rank> or omega0:<rank>")->required();
  measure->add_option("--x", x, "evaluation point a,b");
  measure->add_option("--target", target, "sides, side:<label>, half:x<c, half:y<c or fn:<spec>");
  measure->add_option("--n", n, "precision 2^-n");

  auto* transfer = app.add_subcommand("transfer", "transfer the measure at x0 to x along a connector");
  transfer->add_option("domains", domain, "enumeration directory, domain file or omega0:<rank>")->required();
  transfer->add_option("--x0", x0, "base point");
  transfer->add_option("--x", x, "target point");
  transfer->add_option("--f", fspec, "test function spec");
  transfer->add_option("--n", n, "precision 2^-n");

  auto* approx = app.add_subcommand("approx", "harmonic approximation search with manifest");
  approx->add_option("domain", domain, "domain")->required();
  approx->add_option("--x", x, "base point");
  approx->add_option("--n", n, "index");

  auto* verify = app.add_subcommand("verify", "re-check an approximation manifest against a domain");
  verify->add_option("manifest", manifest, "approximation manifest")->required();
  verify->add_option("--domain", domain, "reference domain")->required();

  auto* rerun = app.add_subcommand("rerun", "re-execute a run manifest");
  rerun->add_option("manifest", manifest, "run manifest (.manifest.json)")->required();

  auto* gal = app.add_subcommand("gallery", "counterexample constructions at desk scale");
  gal->require_subcommand(1);
  auto* gbuild = gal->add_subcommand("build", "rasterize a gallery domain, write .dp and .svg");
  gbuild->add_option("what", what, "omega0, E, D, star, nonregular or A")->required();
  gbuild->add_option("--n", n, "index n");
  gbuild->add_option("--stub", stub, "enumerable set stub");
  gbuild->add_option("--stage", stage, "stage");
  auto* gverify = gal->add_subcommand("verify", "verify one inequality");
  gverify->add_option("id", id, "up1, close, theoremC, lower, bellow, above, dn, bounds1, bounds3, lowlow")
      ->required();
  gverify->add_option("--n", n, "index n");
  gverify->add_option("--k", k, "index k");
  auto* gsep = gal->add_subcommand("demo-separation", "which side of 2^-l_n-1 the value falls");
  gsep->add_option("--stub", stub, "enumerable set stub");
  gsep->add_option("--n", n, "index n");
  gsep->add_option("--stage", stage, "stage (default: whole finite prefix)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  run.out = out;

  try {
    if (*measure) return cmd_measure(run, domain, x, target, n);
    if (*transfer) return cmd_transfer(run, domain, x0, x, fspec, n);
    if (*approx) return cmd_approx(run, domain, x, n);
    if (*verify) return cmd_verify(run, manifest, domain);
    if (*rerun) return cmd_rerun(manifest, out == "." ? "" : out);
    if (*gbuild) return cmd_gallery_build(run, what, n, stub, stage);
    if (*gverify) return cmd_gallery_verify(run, id, n, k ? k : n);
    if (*gsep) return cmd_gallery_separation(run, stub, n, stage);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad argument (" << e.what() << ")\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: argument out of range (" << e.what() << ")\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  return run_args(std::vector<std::string>(argv + 1, argv + argc));
}
