"""Printable summary of ``minkowski.json`` built with fpdf2 core fonts."""
from fpdf import FPDF
from fpdf.enums import XPos, YPos

# las fuentes base solo cubren latin-1
_GREEK = {"Φ": "Phi", "γ": "gamma", "τ": "tau", "β": "beta", "ε": "eps", "α": "alpha", "—": "-", "≥": ">="}

PHI_COLUMNS = (("tau", 28), ("nivel", 30), ("Phi", 40), ("err. cuadratura", 42), ("min |Du|", 32), ("", 18))


def latin1(value) -> str:
    text = "-" if value is None or value == "" else str(value)
    for src, dst in _GREEK.items():
        text = text.replace(src, dst)
    return text.encode("latin-1", "replace").decode("latin-1")


def number(value, digits: int = 8) -> str:
    if isinstance(value, bool):
        return "si" if value else "no"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return latin1(value)


class MinkowskiReportPDF(FPDF):
    def __init__(self, payload: dict):
        super().__init__()
        self.payload = payload
        self.set_auto_page_break(auto=True, margin=15)
        self.set_title("Reporte Minkowski")

    def header(self):
        self.set_font("Helvetica", "B", 14)
        self.cell(0, 9, "Reporte Minkowski", new_x=XPos.LMARGIN, new_y=YPos.NEXT)
        self.set_font("Helvetica", "", 9)
        self.cell(0, 5, latin1(self.payload.get('domain')), new_x=XPos.LMARGIN, new_y=YPos.NEXT)
        self.ln(3)

    def footer(self):
        self.set_y(-12)
        self.set_font("Helvetica", "I", 8)
        hash_ = self.payload.get('provenance', {}).get('config_hash') or ''
        self.cell(0, 6, latin1(f"config {hash_[:12]}  -  pagina {self.page_no()}/{{nb}}"), align="C")

    def section(self, title: str):
        self.set_font("Helvetica", "B", 12)
        self.cell(0, 8, latin1(title), new_x=XPos.LMARGIN, new_y=YPos.NEXT)
        self.set_font("Helvetica", "", 10)

    def facts(self, pairs, label_width: float = 60):
        for label, value in pairs:
            self.set_font("Helvetica", "B", 10)
            self.cell(label_width, 6, latin1(label), border=1)
            self.set_font("Helvetica", "", 10)
            self.cell(0, 6, number(value), border=1, new_x=XPos.LMARGIN, new_y=YPos.NEXT)
        self.ln(3)

    def phi_table(self, samples: list):
        self.set_font("Helvetica", "B", 9)
        self.set_fill_color(230, 230, 230)
        for title, width in PHI_COLUMNS:
            self.cell(width, 6, latin1(title), border=1, align="C", fill=True)
        self.ln()
        self.set_font("Helvetica", "", 9)
        for sample in samples:
            cells = (sample['tau'], sample['level'], sample['phi'], sample['quad_err'], sample['min_grad'],
                     "aviso" if sample.get('flagged') else "")
            for value, (_, width) in zip(cells, PHI_COLUMNS):
                self.cell(width, 5, number(value, 7), border=1, align="R")
            self.ln()
        self.ln(3)

    def note(self, text: str):
        self.set_font("Helvetica", "I", 9)
        self.multi_cell(0, 5, latin1(text), new_x=XPos.LMARGIN, new_y=YPos.NEXT)
        self.set_font("Helvetica", "", 10)
        self.ln(1)

    def beta_block(self, result: dict):
        series = result['series']
        self.section(f"beta = {result['beta']:.6g}")
        self.facts([
            ("Phi(-inf)", series.get('phi_infinity')),
            ("Monotona", series.get('monotone')),
            ("Tolerancia monotonia", series.get('tol_mono')),
            ("Phi(-1) >= Phi(-inf)", series.get('endpoint_ok')),
            ("Nivel profundo vs ajuste", series.get('endpoint_within_spread')),
        ])
        if series.get('samples'):
            self.phi_table(series['samples'])
        if series.get('skipped'):
            self.note(f"Niveles omitidos: {len(series['skipped'])}")
        inequality = result.get('inequality')
        if not inequality:
            return
        self.facts([
            ("Lado izquierdo", inequality.get('lhs')),
            ("Lado derecho", inequality.get('rhs')),
            ("Brecha relativa", inequality.get('relative_gap')),
            ("Oscilacion |Du| en borde", inequality.get('boundary_oscillation')),
            ("Igualdad", inequality.get('equality')),
        ])
        free = inequality.get('gamma_free')
        if free:
            self.note(f"Forma sin gamma: {number(free['lhs'])} >= {number(free['rhs'])} "
                      f"(brecha relativa {number(free['relative_gap'])})")

    def render(self) -> bytes:
        payload = self.payload
        problem = payload.get('problem', {})
        provenance = payload.get('provenance', {})
        self.add_page()
        self.section("Problema")
        self.facts([
            ("n / k", f"{problem.get('n')} / {problem.get('k')}"),
            ("R", problem.get('R')),
            ("eps", problem.get('eps')),
            ("gamma", payload.get('gamma')),
            ("Semilla", provenance.get('seed')),
        ])
        for result in payload.get('results', []):
            self.beta_block(result)
        return bytes(self.output())


def build_minkowski_pdf(payload: dict) -> bytes:
    """Resumen imprimible de ``minkowski.json``: dominio, serie Phi por beta y la desigualdad."""
    return MinkowskiReportPDF(payload).render()
