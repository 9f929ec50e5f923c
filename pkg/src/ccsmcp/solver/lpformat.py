"""CPLEX-style LP text export."""

from pathlib import Path


def _num(a: float) -> str:
    return "%.17g" % a


def _terms(pairs) -> str:
    out = []
    for name, a in pairs:
        sign = "-" if a < 0 else "+"
        out.append(f"{sign} {_num(abs(a))} {name}")
    text = " ".join(out)
    return text[2:] if text.startswith("+ ") else text


def lp_text(model) -> str:
    """Deterministic LP text; terms and variable lists are sorted by name."""
    names = model.var_names
    lines = ["\\ " + (model.kind or "model"), "Minimize"]
    obj = sorted((names[j], a) for j, a in enumerate(model.objective) if a != 0)
    lines.append(" obj: " + (_terms(obj) if obj else "0"))
    lines.append("Subject To")
    for r, con in enumerate(model.constraints):
        label = con.name or f"r{r}"
        terms = sorted((names[j], a) for j, a in con.coeffs.items())
        sense = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
        lhs = _terms(terms) if terms else f"0 {names[0]}" if names else "0"
        lines.append(f" {label}: {lhs} {sense} {_num(con.rhs)}")
    lines.append("Bounds")
    for name in sorted(names):
        lines.append(f" 0 <= {name} <= 1")
    binaries = sorted(names[j] for j in model.binaries)
    if binaries:
        lines.append("Binaries")
        for start in range(0, len(binaries), 8):
            lines.append(" " + " ".join(binaries[start : start + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(model, path) -> None:
    Path(path).write_text(lp_text(model))
