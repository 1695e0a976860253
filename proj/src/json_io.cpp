#include "mbp/json_io.hpp"

namespace mbp {

json complex_to_json(cd z) { return json::array({z.real(), z.imag()}); }

cd complex_from_json(const json& j) {
  if (j.is_number()) return cd(j.get<double>(), 0.0);
  if (!j.is_array() || j.size() != 2)
    fail(Err::SchemaError, "complex value must be a number or [re, im]");
  return cd(j[0].get<double>(), j[1].get<double>());
}

json mat_to_json(const Mat& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out.push_back(complex_to_json(m(i, j)));
  return out;
}

Mat mat_from_json(const json& j, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows * cols)
    fail(Err::SchemaError, "matrix entry count mismatch");
  Mat m(rows, cols);
  int idx = 0;
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = complex_from_json(j[idx++]);
  return m;
}

json matpoly_to_json(const MatPoly& P) {
  json out;
  out["p"] = P.p();
  json coeffs = json::array();
  for (int k = 0; k <= P.degree(); ++k) coeffs.push_back(mat_to_json(P.coeff(k)));
  out["coeffs"] = coeffs;
  return out;
}

MatPoly matpoly_from_json(const json& j) {
  if (!j.contains("p") || !j.contains("coeffs"))
    fail(Err::SchemaError, "matrix polynomial needs p and coeffs");
  int p = j["p"].get<int>();
  std::vector<Mat> c;
  for (const auto& ck : j["coeffs"]) c.push_back(mat_from_json(ck, p, p));
  if (c.empty()) c.push_back(Mat::Zero(p, p));
  return MatPoly(std::move(c));
}

json vec_functional_to_json(const VecFunctional& f) {
  json out = json::array();
  for (const auto& t : f.terms) {
    json term;
    term["node"] = complex_to_json(t.node);
    term["order"] = t.order;
    json coef = json::array();
    for (int i = 0; i < t.coef.size(); ++i) coef.push_back(complex_to_json(t.coef(i)));
    term["coef"] = coef;
    out.push_back(term);
  }
  return out;
}

VecFunctional vec_functional_from_json(const json& j, int p) {
  VecFunctional f;
  for (const auto& term : j) {
    VecFunctional::Term t;
    t.node = complex_from_json(term.at("node"));
    t.order = term.at("order").get<int>();
    const auto& coef = term.at("coef");
    if (static_cast<int>(coef.size()) != p) fail(Err::SchemaError, "functional coef size");
    t.coef = Vec(p);
    for (int i = 0; i < p; ++i) t.coef(i) = complex_from_json(coef[i]);
    f.terms.push_back(std::move(t));
  }
  return f;
}

json uvarov_term_to_json(const UvarovTerm& t) {
  json out;
  out["y_point"] = complex_to_json(t.y_point);
  out["order"] = t.order;
  json terms = json::array();
  for (const auto& b : t.beta.terms) {
    json term;
    term["node"] = complex_to_json(b.node);
    term["order"] = b.order;
    term["coef"] = mat_to_json(b.coef);
    terms.push_back(term);
  }
  out["beta"] = terms;
  return out;
}

UvarovTerm uvarov_term_from_json(const json& j, int p) {
  UvarovTerm t;
  t.y_point = complex_from_json(j.at("y_point"));
  t.order = j.at("order").get<int>();
  for (const auto& term : j.at("beta")) {
    MatFunctional::Term b;
    b.node = complex_from_json(term.at("node"));
    b.order = term.at("order").get<int>();
    b.coef = mat_from_json(term.at("coef"), p, p);
    t.beta.terms.push_back(std::move(b));
  }
  return t;
}

json kernel_to_json(const KernelRep& k) {
  json out;
  out["variant"] = k.is_hankel() ? "hankel" : "discrete";
  out["p"] = k.p();
  if (k.is_hankel()) {
    json moments = json::array();
    for (int n = 0; n <= std::min(k.moment_budget(), 32); ++n)
      moments.push_back(mat_to_json(k.moment(n)));
    out["moments"] = moments;
    out["support_radius"] = k.rx();
  } else {
    json nx = json::array(), ny = json::array(), w = json::array();
    for (cd x : k.nodes_x()) nx.push_back(complex_to_json(x));
    for (cd y : k.nodes_y()) ny.push_back(complex_to_json(y));
    for (size_t i = 0; i < k.nodes_x().size(); ++i)
      for (size_t j = 0; j < k.nodes_y().size(); ++j)
        w.push_back(mat_to_json(k.weight(static_cast<int>(i), static_cast<int>(j))));
    out["nodes_x"] = nx;
    out["nodes_y"] = ny;
    out["weights"] = w;
  }
  json uv = json::array();
  for (const auto& t : k.uvarov_terms()) uv.push_back(uvarov_term_to_json(t));
  if (!uv.empty()) out["uvarov"] = uv;
  json masses = json::array();
  for (const auto& m : k.masses()) {
    json mj;
    mj["y_point"] = complex_to_json(m.y_point);
    mj["order"] = m.order;
    mj["left"] = json::array();
    for (int j = 0; j <= m.left.degree(); ++j) {
      json row = json::array();
      for (int c = 0; c < k.p(); ++c) row.push_back(complex_to_json(m.left.coeff(j)(0, c)));
      mj["left"].push_back(row);
    }
    mj["xi"] = vec_functional_to_json(m.xi);
    masses.push_back(mj);
  }
  if (!masses.empty()) out["masses"] = masses;
  return out;
}

KernelRep kernel_from_json(const json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  const int p = j.at("p").get<int>();
  if (variant == "hankel") {
    std::vector<Mat> moments;
    for (const auto& m : j.at("moments")) moments.push_back(mat_from_json(m, p, p));
    double radius = j.value("support_radius", 1.0);
    std::shared_ptr<CauchyProvider> provider;
    if (j.value("provider", std::string()) == "lebesgue") {
      if (p != 1) fail(Err::SchemaError, "lebesgue provider is scalar");
      provider = std::make_shared<LebesgueProvider>();
    }
    KernelRep base = KernelRep::hankel(std::move(moments), radius, provider);
    if (j.contains("uvarov")) {
      std::vector<UvarovTerm> terms;
      for (const auto& t : j["uvarov"]) terms.push_back(uvarov_term_from_json(t, p));
      return uvarov_kernel(base, terms);
    }
    return base;
  }
  if (variant == "discrete") {
    std::vector<cd> nx, ny;
    for (const auto& v : j.at("nodes_x")) nx.push_back(complex_from_json(v));
    for (const auto& v : j.at("nodes_y")) ny.push_back(complex_from_json(v));
    std::vector<Mat> w;
    for (const auto& m : j.at("weights")) w.push_back(mat_from_json(m, p, p));
    KernelRep base = KernelRep::discrete(std::move(nx), std::move(ny), std::move(w));
    if (j.contains("uvarov")) {
      std::vector<UvarovTerm> terms;
      for (const auto& t : j["uvarov"]) terms.push_back(uvarov_term_from_json(t, p));
      return uvarov_kernel(base, terms);
    }
    return base;
  }
  fail(Err::SchemaError, "unknown kernel variant: " + variant);
}

}  // namespace mbp
