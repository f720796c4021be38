"""Classify a few depth-one formulas by what their common knowledge looks like."""

from kripkecells.commonknowledge import classification_report
from kripkecells.formula import Workspace, parse

space = Workspace(1, 2)
for text in ["p0 | !p0", "K0 p0 | K0 !p0", "K0 p0 & K1 p0", "K0 p0"]:
    report = classification_report(space, parse(text, space))
    print(f"{text:>16}  closed={report['semantically_closed']!s:5}  "
          f"nonempty={report['ck_nonempty']!s:5}  gen level={report['gen_level']}  "
          f"generative={report['generative']['status']}")
