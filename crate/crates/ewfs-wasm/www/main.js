// Static glue for the demo page. Build the wasm package into ./pkg first:
//   wasm-pack build crates/ewfs-wasm --target web --out-dir www/pkg
import init, { tables, classify_model, nogo, fr_chain, specker } from "./pkg/ewfs_wasm.js";

const $ = (id) => document.getElementById(id);

function el(tag, attrs = {}, children = []) {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else if (k === "text") node.textContent = v;
    else node.setAttribute(k, v);
  }
  for (const child of children) node.append(child);
  return node;
}

function renderTable(report, probabilities) {
  const container = $("table");
  container.replaceChildren();
  if (!report.rows.length) return;
  const header = el("tr", {}, [el("th", { text: "context" })]);
  for (const cell of report.rows[0].cells) {
    header.append(el("th", { text: cell.outcome.join(",") }));
  }
  const table = el("table", {}, [header]);
  for (const row of report.rows) {
    const tr = el("tr", {}, [el("th", { text: row.context.join(",") })]);
    for (const cell of row.cells) {
      const body = probabilities
        ? (cell.fraction ?? cell.probability.toFixed(6))
        : (cell.possible ? "1" : "0");
      tr.append(el("td", { class: cell.possible ? "possible" : "impossible", text: body }));
    }
    table.append(tr);
  }
  container.append(table);
}

function renderClassification(report) {
  const container = $("classification");
  container.replaceChildren();
  container.append(el("div", {}, [
    el("span", { class: "verdict sat", text: report.level }),
    el("span", {
      class: "note",
      text: `  ${report.consistent_global_count} consistent global assignment(s)`,
    }),
  ]));
  if (report.witness) {
    const section = report.witness.section.map(([m, v]) => `${m}↦${v}`).join(", ");
    container.append(el("p", {
      class: "note",
      text: `possible section {${section}} of context {${report.witness.context.join(",")}} extends to no global assignment`,
    }));
  }
  if (report.lp && report.lp.verdict === "feasible") {
    const list = el("ul", { class: "statements mono" });
    for (const term of report.lp.weights) {
      const assignment = term.assignment.map(([m, v]) => `${m}↦${v}`).join(", ");
      list.append(el("li", { text: `${term.weight} × {${assignment}}` }));
    }
    container.append(el("p", { class: "note", text: "deterministic mixture:" }), list);
  }
  if (report.lp && report.lp.verdict === "infeasible") {
    container.append(el("p", {
      class: "note",
      text: "no distribution over global assignments reproduces the tables (exact rational check)",
    }));
  }
}

async function refreshModel() {
  const model = $("model").value;
  const probabilities = $("show-probabilities").checked;
  renderTable(JSON.parse(tables(model)), probabilities);
  renderClassification(JSON.parse(classify_model(model)));
}

function flagState() {
  const flags = {};
  for (const box of document.querySelectorAll("#flags input")) {
    flags[box.dataset.flag] = box.checked;
  }
  return flags;
}

function applyPreset(name) {
  const presets = {
    truth: ["aoe", "born_compat_aoe"],
    agreement: ["personal_knowledge", "classical_agreement", "born_compat_persk"],
    practicality: ["born_practicality"],
  };
  for (const box of document.querySelectorAll("#flags input")) {
    box.checked = presets[name].includes(box.dataset.flag);
  }
}

function renderStatement(statement, suffix) {
  const kind = statement.kind;
  let body;
  if (kind.Parity) {
    body = `${kind.Parity.vars.map((v) => v.toLowerCase()).join(" ⊕ ")} = ${kind.Parity.rhs}`;
  } else {
    const vars = kind.Forbidden.vars.map((v) => v.toLowerCase()).join(",");
    const sets = kind.Forbidden.excluded.map((o) => `(${o.join(",")})`).join(", ");
    body = `(${vars}) ∉ {${sets}}`;
  }
  return `K_${statement.owner}[${body}]${suffix ?? ""}`;
}

function refreshNogo() {
  const flags = flagState();
  const container = $("nogo");
  container.replaceChildren();
  let report;
  try {
    report = JSON.parse(nogo(
      $("protocol").value,
      flags.aoe,
      flags.born_compat_aoe,
      flags.personal_knowledge,
      flags.classical_agreement,
      flags.born_compat_persk,
      flags.born_practicality,
    ));
  } catch (e) {
    container.append(el("p", { class: "note", text: String(e) }));
    return;
  }
  const sat = "Sat" in report.verdict;
  container.append(el("p", {}, [
    el("span", { class: `verdict ${sat ? "sat" : "unsat"}`, text: sat ? "SAT" : "UNSAT" }),
  ]));
  const list = el("ul", { class: "statements mono" });
  for (const s of report.statements) {
    list.append(el("li", { text: renderStatement(s, s.condition === "OnGather" ? "  (on gather)" : "") }));
  }
  container.append(el("p", { class: "note", text: "derived statements:" }), list);
  if (report.equalities.length) {
    const eq = el("ul", { class: "statements mono" });
    for (const e of report.equalities) {
      eq.append(el("li", { text: `f_${e.left[0]}(${e.left[1]}) = f_${e.right[0]}(${e.right[1]})` }));
    }
    container.append(el("p", { class: "note", text: "overlap equalities:" }), eq);
  }
  if (!sat) {
    const core = el("ul", { class: "statements mono" });
    for (const item of report.verdict.Unsat.certificate) {
      if (item.Statement) core.append(el("li", { text: renderStatement(item.Statement) }));
      else {
        const e = item.Equality;
        core.append(el("li", { text: `f_${e.left[0]}(${e.left[1]}) = f_${e.right[0]}(${e.right[1]})` }));
      }
    }
    container.append(el("p", { class: "note", text: "minimal inconsistent core:" }), core);
    if (report.gf2_check) {
      container.append(el("p", {
        class: "note",
        text: `GF(2) sum: left-hand sides cancel, right-hand sides sum to ${report.gf2_check.rhs_sum} — 0 = 1`,
      }));
    }
  } else {
    const model = report.verdict.Sat.model;
    const rendered = Object.entries(model).map(([k, v]) => `${k} = ${v}`).join(", ");
    if (rendered) {
      container.append(el("p", { class: "note mono", text: `model: ${rendered}` }));
    }
  }
  if (report.resolutions.length) {
    const res = el("ul", { class: "statements" });
    for (const r of report.resolutions) res.append(el("li", { text: r.text }));
    container.append(el("p", { class: "note", text: "conditional statements:" }), res);
  }
}

function refreshChain() {
  const container = $("chain");
  container.replaceChildren();
  let report;
  try {
    report = JSON.parse(fr_chain(Number($("chain-u").value), Number($("chain-w").value)));
  } catch (e) {
    container.append(el("p", { class: "note", text: String(e) }));
    return;
  }
  container.append(el("p", {
    class: "note",
    text: `post-selection probability ${report.postselect_probability.toFixed(12)}`,
  }));
  if (!report.links.length) {
    container.append(el("p", { text: "No value is forced; the chain stops immediately." }));
  }
  for (const link of report.links) {
    container.append(el("div", { class: "chain-step mono" }, [
      el("span", { text: `${link.given[0].toLowerCase()} = ${link.given[1]} ` }),
      el("span", { class: "arrow", text: "⇒" }),
      el("span", { text: ` ${link.forced[0].toLowerCase()} = ${link.forced[1]}   [${link.context.join(",")}]` }),
    ]));
  }
  container.append(el("p", {}, [
    report.contradiction
      ? el("span", { class: "verdict unsat", text: report.contradiction })
      : el("span", { class: "verdict sat", text: "no contradiction derivable" }),
  ]));
}

function refreshTriangle() {
  const container = $("triangle");
  container.replaceChildren();
  const [u, v, w] = $("specker").value.split(",").map(Number);
  const report = JSON.parse(specker(u, v, w));
  const list = el("ul", { class: "statements mono" });
  for (const p of report.parities) {
    list.append(el("li", { text: renderStatement(p) }));
  }
  container.append(list, el("p", {}, [
    el("span", { class: "verdict unsat", text: "UNSAT over all 8 assignments" }),
  ]));
}

async function main() {
  await init();
  $("model").addEventListener("change", refreshModel);
  $("show-probabilities").addEventListener("change", refreshModel);
  $("protocol").addEventListener("change", refreshNogo);
  for (const box of document.querySelectorAll("#flags input")) {
    box.addEventListener("change", refreshNogo);
  }
  for (const button of document.querySelectorAll("[data-preset]")) {
    button.addEventListener("click", () => {
      applyPreset(button.dataset.preset);
      refreshNogo();
    });
  }
  $("chain-u").addEventListener("change", refreshChain);
  $("chain-w").addEventListener("change", refreshChain);
  $("specker").addEventListener("change", refreshTriangle);
  await refreshModel();
  refreshNogo();
  refreshChain();
  refreshTriangle();
}

main();
