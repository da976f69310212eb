/** Cumulative score bar chart: one bar per completed round. */

export function renderScoreChart(
  container: HTMLElement,
  scores: number[],
  totalRounds: number,
): void {
  container.innerHTML = "";
  container.classList.add("score-chart");
  const peak = Math.max(1, ...scores);
  for (let i = 0; i < scores.length; i++) {
    const score = scores[i] ?? 0;
    const bar = container.ownerDocument.createElement("div");
    bar.className = "score-bar";
    bar.dataset.round = String(i + 1);
    bar.dataset.score = String(score);
    bar.style.height = `${Math.round((score / peak) * 100)}%`;
    bar.title = `Round ${i + 1}: ${score} points`;
    container.appendChild(bar);
  }
  container.dataset.totalRounds = String(totalRounds);
}
