"""Seeded random generator for subset programs.

Produces deterministic programs (<= 40 statements) that exercise every
slicing-relevant construct: declarations with all initializer shapes,
reassignment (plain and compound), member reads and writes, calls in every
role, shadowing blocks, nested closures with captures, and imports.
Generated code always resolves every name it uses and declares before use.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

LITERALS = ['1', '42', '3.5', '"alpha"', '"beta"', "'x'", 'true', 'false', 'null', '[]']
CTOR_NAMES = ["Widget", "Store", "Client", "Router"]
METHOD_NAMES = ["send", "read", "write", "load", "save", "query", "emit", "push"]
PROP_NAMES = ["body", "status", "value", "name", "items", "config"]
ANNOTATIONS = ["string", "number", "Widget", "Promise<string>", "Array"]


@dataclass
class _Scope:
    vars: list[str] = field(default_factory=list)
    funcs: list[tuple[str, int]] = field(default_factory=list)  # (name, arity)


class ProgramGenerator:
    def __init__(self, seed: int, max_statements: int = 40):
        self.rng = random.Random(seed)
        self.max_statements = max_statements
        self.counter = 0
        self.budget = 0

    def fresh(self, prefix: str = "v") -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def generate(self) -> str:
        rng = self.rng
        self.counter = 0
        self.budget = rng.randint(4, self.max_statements)
        lines: list[str] = []
        scope = _Scope()
        if rng.random() < 0.6:
            ctor = rng.choice(CTOR_NAMES)
            lines.append(f'import {{ {ctor} }} from "lib/{ctor.lower()}";')
            scope.vars.append(ctor)
            self.budget -= 1
        body = self._statements(scope, [scope], depth=0)
        lines.extend(body)
        return "\n".join(lines) + "\n"

    # -- statements -----------------------------------------------------

    def _statements(self, scope: _Scope, chain: list[_Scope], depth: int) -> list[str]:
        rng = self.rng
        out: list[str] = []
        while self.budget > 0:
            self.budget -= 1
            choice = rng.random()
            visible = [v for s in chain for v in s.vars]
            if choice < 0.32 or not visible:
                out.extend(self._declaration(scope, chain, depth))
            elif choice < 0.45:
                out.append(self._usage(rng.choice(visible), chain))
            elif choice < 0.56:
                out.append(self._reassign(rng.choice(visible), chain))
            elif choice < 0.66 and depth < 2:
                out.extend(self._if_block(scope, chain, depth))
            elif choice < 0.76 and depth < 2:
                out.extend(self._function(scope, chain, depth))
            elif choice < 0.84:
                funcs = [f for s in chain for f in s.funcs]
                if funcs:
                    name, arity = rng.choice(funcs)
                    args = [self._arg(chain) for _ in range(arity)]
                    out.append(f"{name}({', '.join(args)});")
                else:
                    out.extend(self._declaration(scope, chain, depth))
            else:
                out.append(self._member_write(chain))
            if rng.random() < 0.08:
                break
        return out

    def _declaration(self, scope: _Scope, chain: list[_Scope], depth: int) -> list[str]:
        rng = self.rng
        name = self.fresh()
        kw = rng.choice(["let", "const", "var", "let"])
        annotation = ""
        if rng.random() < 0.25:
            annotation = f": {rng.choice(ANNOTATIONS)}"
        init = self._initializer(chain)
        if init is None:
            if kw == "const":
                kw = "let"
            stmt = f"{kw} {name}{annotation};"
        else:
            stmt = f"{kw} {name}{annotation} = {init};"
        scope.vars.append(name)
        return [stmt]

    def _initializer(self, chain: list[_Scope]) -> str | None:
        rng = self.rng
        visible = [v for s in chain for v in s.vars]
        roll = rng.random()
        if roll < 0.30:
            return rng.choice(LITERALS)
        if roll < 0.42:
            ctors = [v for v in visible if v in CTOR_NAMES]
            ctor = rng.choice(ctors) if ctors else rng.choice(CTOR_NAMES)
            args = [self._arg(chain) for _ in range(rng.randint(0, 2))]
            return f"new {ctor}({', '.join(args)})"
        if roll < 0.55 and visible:
            return rng.choice(visible)
        if roll < 0.66 and visible:
            base = rng.choice(visible)
            return f"{base}.{rng.choice(PROP_NAMES)}"
        if roll < 0.78 and visible:
            base = rng.choice(visible)
            method = rng.choice(METHOD_NAMES)
            args = [self._arg(chain) for _ in range(rng.randint(0, 2))]
            return f"{base}.{method}({', '.join(args)})"
        if roll < 0.90:
            keys = rng.sample(PROP_NAMES, rng.randint(1, 2))
            parts = [f"{k}: {self._arg(chain)}" for k in keys]
            return f"{{ {', '.join(parts)} }}"
        if roll < 0.96:
            return None
        return f"[{self._arg(chain)}]"

    def _arg(self, chain: list[_Scope]) -> str:
        rng = self.rng
        visible = [v for s in chain for v in s.vars]
        if visible and rng.random() < 0.55:
            return rng.choice(visible)
        return rng.choice(LITERALS)

    def _usage(self, name: str, chain: list[_Scope]) -> str:
        rng = self.rng
        roll = rng.random()
        if roll < 0.40:
            method = rng.choice(METHOD_NAMES)
            args = [self._arg(chain) for _ in range(rng.randint(0, 2))]
            return f"{name}.{method}({', '.join(args)});"
        if roll < 0.60:
            return f"{name}.{rng.choice(PROP_NAMES)};"
        if roll < 0.80:
            receiver = rng.choice([v for s in chain for v in s.vars])
            return f"{receiver}.{rng.choice(METHOD_NAMES)}({name});"
        if roll < 0.90:
            return f"{name};"
        return f"{name}[0];"

    def _reassign(self, name: str, chain: list[_Scope]) -> str:
        rng = self.rng
        if rng.random() < 0.25:
            op = rng.choice(["+=", "-=", "*="])
            amount = rng.choice(["1", "2", '"s"'])
            return f"{name} {op} {amount};"
        init = self._initializer(chain) or "null"
        return f"{name} = {init};"

    def _if_block(self, scope: _Scope, chain: list[_Scope], depth: int) -> list[str]:
        rng = self.rng
        visible = [v for s in chain for v in s.vars]
        cond = rng.choice(visible) if visible else "true"
        inner = _Scope()
        if rng.random() < 0.3 and visible:
            # Shadow an outer name inside the block.
            shadowed = rng.choice(visible)
            body = [f"let {shadowed} = {rng.choice(LITERALS)};"]
            inner.vars.append(shadowed)
        else:
            body = []
        saved = self.budget
        self.budget = min(self.budget, rng.randint(1, 4))
        body.extend(self._statements(inner, chain + [inner], depth + 1))
        self.budget = max(saved - len(body) - 1, 0)
        lines = [f"if ({cond}) {{"] + [f"  {s}" for s in body] + ["}"]
        if rng.random() < 0.3:
            other = _Scope()
            saved = self.budget
            self.budget = min(self.budget, rng.randint(1, 3))
            else_body = self._statements(other, chain + [other], depth + 1)
            self.budget = max(saved - len(else_body) - 1, 0)
            lines[-1] = "} else {"
            lines.extend([f"  {s}" for s in else_body] + ["}"])
        return lines

    def _function(self, scope: _Scope, chain: list[_Scope], depth: int) -> list[str]:
        rng = self.rng
        name = self.fresh("f")
        params = [self.fresh("p") for _ in range(rng.randint(0, 2))]
        inner = _Scope(vars=list(params))
        saved = self.budget
        self.budget = min(self.budget, rng.randint(1, 5))
        body = self._statements(inner, chain + [inner], depth + 1)
        if rng.random() < 0.5:
            visible = params + [v for s in chain for v in s.vars]
            ret = rng.choice(visible) if visible and rng.random() < 0.5 else rng.choice(LITERALS)
            body.append(f"return {ret};")
        self.budget = max(saved - len(body) - 1, 0)
        indented = [f"  {s}" for s in body]
        arity = len(params)
        param_text = ", ".join(params)
        if rng.random() < 0.5:
            scope.vars.append(name)
            scope.funcs.append((name, arity))
            header = f"const {name} = ({param_text}) => {{"
        else:
            scope.funcs.append((name, arity))
            scope.vars.append(name)
            header = f"function {name}({param_text}) {{"
        footer = "};" if header.startswith("const") else "}"
        return [header] + indented + [footer]

    def _member_write(self, chain: list[_Scope]) -> str:
        rng = self.rng
        visible = [v for s in chain for v in s.vars]
        if not visible:
            return "0;"
        base = rng.choice(visible)
        return f"{base}.{rng.choice(PROP_NAMES)} = {self._arg(chain)};"


def generate_program(seed: int, max_statements: int = 40) -> str:
    return ProgramGenerator(seed, max_statements).generate()
