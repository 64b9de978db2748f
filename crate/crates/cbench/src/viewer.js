// Exact posterior queries on the embedded network by variable elimination.
// Loaded inline by the dashboard page and as a module by tests.

function factorSize(card, vars) {
  return vars.reduce((n, v) => n * card[v], 1);
}

function strides(card, vars) {
  const s = [];
  let acc = 1;
  for (const v of vars) { s.push(acc); acc *= card[v]; }
  return s;
}

function product(card, f, g) {
  const vars = [...f.vars];
  for (const v of g.vars) if (!vars.includes(v)) vars.push(v);
  const size = factorSize(card, vars);
  const values = new Float64Array(size);
  const fs = strides(card, f.vars), gs = strides(card, g.vars);
  const fpos = vars.map(v => { const i = f.vars.indexOf(v); return i < 0 ? 0 : fs[i]; });
  const gpos = vars.map(v => { const i = g.vars.indexOf(v); return i < 0 ? 0 : gs[i]; });
  const digit = new Array(vars.length).fill(0);
  let fi = 0, gi = 0;
  for (let k = 0; k < size; k++) {
    values[k] = f.values[fi] * g.values[gi];
    for (let d = 0; d < vars.length; d++) {
      digit[d]++;
      fi += fpos[d]; gi += gpos[d];
      if (digit[d] < card[vars[d]]) break;
      fi -= fpos[d] * digit[d]; gi -= gpos[d] * digit[d];
      digit[d] = 0;
    }
  }
  return { vars, values };
}

function sumOut(card, f, v) {
  const at = f.vars.indexOf(v);
  const vars = f.vars.filter(x => x !== v);
  const values = new Float64Array(factorSize(card, vars));
  const s = strides(card, f.vars);
  const below = s[at], r = card[v];
  for (let k = 0; k < f.values.length; k++) {
    const hi = Math.floor(k / (below * r));
    values[hi * below + (k % below)] += f.values[k];
  }
  return { vars, values };
}

// Distribution of `event` given `evidence` ({node: level}).
function posterior(bn, event, evidence) {
  const names = bn.dag.nodes;
  const index = new Map(names.map((n, i) => [n, i]));
  const card = bn.levels.map(l => l.length);
  const parents = bn.cpts.map(c => c.parents.map(p => index.get(p)));
  const target = index.get(event);
  if (target === undefined) throw new Error(`unknown node ${event}`);
  const clamp = new Map();
  for (const [node, level] of Object.entries(evidence)) {
    const v = index.get(node);
    if (v === undefined) throw new Error(`unknown node ${node}`);
    const l = bn.levels[v].indexOf(level);
    if (l < 0) throw new Error(`unknown level ${level} of ${node}`);
    clamp.set(v, l);
  }
  const keep = new Set();
  const stack = [target, ...clamp.keys()];
  while (stack.length) {
    const v = stack.pop();
    if (!keep.has(v)) { keep.add(v); stack.push(...parents[v]); }
  }
  let factors = [];
  for (const v of keep) {
    const vars = [...parents[v], v];
    const q = factorSize(card, parents[v]);
    const values = new Float64Array(q * card[v]);
    bn.cpts[v].table.forEach((row, j) => row.forEach((p, k) => { values[j + q * k] = p; }));
    factors.push({ vars, values });
    if (clamp.has(v)) {
      const ind = new Float64Array(card[v]);
      ind[clamp.get(v)] = 1;
      factors.push({ vars: [v], values: ind });
    }
  }
  const pending = [...keep].filter(v => v !== target);
  while (pending.length) {
    let best = 0, bestSize = Infinity;
    pending.forEach((v, i) => {
      const scope = new Set();
      for (const f of factors) if (f.vars.includes(v)) f.vars.forEach(x => scope.add(x));
      const size = factorSize(card, [...scope]);
      if (size < bestSize) { best = i; bestSize = size; }
    });
    const v = pending.splice(best, 1)[0];
    const touching = factors.filter(f => f.vars.includes(v));
    factors = factors.filter(f => !f.vars.includes(v));
    factors.push(sumOut(card, touching.reduce((a, b) => product(card, a, b)), v));
  }
  const joint = factors.reduce((a, b) => product(card, a, b), { vars: [], values: new Float64Array([1]) });
  const total = joint.values.reduce((a, b) => a + b, 0);
  if (!(total > 0)) throw new Error("impossible evidence");
  return Array.from(joint.values, x => x / total);
}

if (typeof module !== "undefined") module.exports = { posterior };
