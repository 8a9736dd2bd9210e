"""Terminal-style rendering of the step events emitted by recoveries and runners."""

STATUS_PREFIX = {
    "running": "...",
    "done": "[OK]",
    "error": "[ERR]",
    "warn": "[WARN]",
}


def format_step(step: dict) -> str:
    """One event as ``[OK]   AMOP | Converged`` with the detail on an indented second line."""
    agent = step.get("agent", "Bench")
    title = step.get("title", "")
    detail = step.get("detail", "")
    prefix = STATUS_PREFIX.get(step.get("status", "running"), "...")
    line = f"{prefix:<6} {agent} | {title}"
    if detail:
        line += f"\n       {' ' * len(agent)}   {detail}"
    return line


class LiveProgressPanel:
    """Accumulates step events into any placeholder with a ``.code(text, language=...)`` method."""

    def __init__(self, placeholder, max_lines: int = 200):
        self._ph = placeholder
        self._lines: list[str] = []
        self.max_lines = max_lines
        self.last_progress = None

    @property
    def lines(self) -> list:
        return list(self._lines)

    def _render(self):
        self._ph.code("\n".join(self._lines), language="text")

    def __call__(self, step: dict):
        if "progress" in step:
            self.last_progress = step["progress"]
        self._lines.append(format_step(step))
        # keep the tail only
        del self._lines[: -self.max_lines]
        self._render()

    def clear(self):
        self._lines = []
        self._render()
