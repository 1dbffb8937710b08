"""The Golden Ball engine.

A league of ``tn`` teams with ``pt`` players each plays seasons until an
entire season improves neither the summed team strength, the summed captain
quality nor the best solution.  Within a season every match day starts with
training (each team's coach is a neighbourhood move), stalled players get a
crossover with their captain, and teams then meet in a double round robin.
After each half season the standings drive player transfers between the top
and bottom halves and the bottom half replaces its coaches.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, RunRecord, Search, canonical_quality_order
from .operators import MoveKind, parse_move


@dataclass(frozen=True)
class GbConfig:
    """League shape and operator choices.

    ``moves`` and ``crossover`` default to the problem's own pools.  The two
    caps are safety valves only; the natural stop is the season rule.
    """

    tn: int = 4
    pt: int = 12
    custom_threshold: int = 6
    special_threshold: int = 12
    moves: tuple | None = None
    crossover: str | None = None
    max_seasons: int | None = 1000
    max_evaluations: int | None = None

    def __post_init__(self):
        if self.tn < 2:
            raise ValueError("a league needs at least 2 teams")
        if self.pt < 1:
            raise ValueError("teams need at least one player")
        if self.custom_threshold < 1 or self.special_threshold < 1:
            raise ValueError("training thresholds must be positive")
        if self.moves is not None:
            if len(self.moves) == 0:
                raise ValueError("move pool is empty")
            object.__setattr__(self, "moves", tuple(parse_move(m) for m in self.moves))

    @classmethod
    def for_problem(cls, problem, **overrides) -> "GbConfig":
        """Defaults per problem family (larger league for clustered routing)."""
        base = {"tn": 5, "pt": 20} if problem.kind == "acvrp" else {}
        base.update(overrides)
        return cls(**base)

    def move_pool(self, problem) -> tuple:
        return self.moves if self.moves is not None else tuple(problem.default_moves)

    def crossover_kind(self, problem) -> str:
        return self.crossover or problem.crossover_kind


@dataclass
class Player:
    genotype: np.ndarray
    f: float
    q: float
    stagnation: int = 0


@dataclass
class Team:
    players: list
    coach: MoveKind
    points: int = 0
    tq: float = 0.0

    def update_tq(self) -> float:
        self.tq = sum(p.q for p in self.players) / len(self.players)
        return self.tq

    def order(self) -> list[int]:
        """Player indices by descending quality (stable)."""
        return canonical_quality_order([p.q for p in self.players])

    def captain_index(self, gen: np.random.Generator) -> int:
        qs = [p.q for p in self.players]
        top = max(qs)
        ties = [i for i, q in enumerate(qs) if q == top]
        return ties[0] if len(ties) == 1 else ties[int(gen.integers(len(ties)))]


@dataclass
class League:
    teams: list
    season: int = 0
    snapshot: tuple = (math.nan, math.nan, math.inf)
    history: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return sum(len(t.players) for t in self.teams)

    def sum_tq(self) -> float:
        return sum(t.tq for t in self.teams)

    def sum_captains(self) -> float:
        return sum(max(p.q for p in t.players) for t in self.teams)


# ---------------------------------------------------------------------------


def _player(search: Search, g: np.ndarray, f: float) -> Player:
    return Player(g, f, search.quality(f))


def initialize_league(search: Search, config: GbConfig) -> League:
    """Random feasible players dealt at random into teams, each with a random coach."""
    problem, gen = search.problem, search.gen
    total = config.tn * config.pt
    players = []
    for _ in range(total):
        g = problem.prepare(problem.random_solution(gen))
        players.append(_player(search, g, search.evaluate(g)))
    deal = gen.permutation(total)
    pool = config.move_pool(problem)
    teams = []
    for t in range(config.tn):
        members = [players[int(k)] for k in deal[t * config.pt:(t + 1) * config.pt]]
        teams.append(Team(members, pool[int(gen.integers(len(pool)))]))
    for t in teams:
        t.update_tq()
    league = League(teams)
    league.snapshot = (league.sum_tq(), league.sum_captains(), search.best_f)
    return league


def training_session(player: Player, coach: int, search: Search) -> Player:
    """Hill-climb ``player`` with the coach's move; update its stagnation counter."""
    g, f, improved = search.train(player.genotype, player.f, coach)
    if improved:
        player.genotype, player.f, player.q = g, f, search.quality(f)
        player.stagnation = 0
    else:
        player.stagnation += 1
    return player


def custom_training(player: Player, captain: Player, search: Search, kind: str) -> Player:
    """Replace ``player`` by a crossover child with its captain.

    The first feasible child (player-led first) wins regardless of quality;
    when recombination yields no feasible child the player is left as is.
    The stagnation counter is not touched.
    """
    problem = search.problem
    children = problem.crossover(problem.canonical(player.genotype),
                                 problem.canonical(captain.genotype), search.gen, kind,
                                 search.evaluate)
    for child, f in children:
        if child is not None and math.isfinite(f):
            player.genotype = problem.prepare(child)
            player.f, player.q = f, search.quality(f)
            break
    return player


def play_match(team1: Team, team2: Team) -> tuple[int, int]:
    """Positional duels between the quality-sorted rosters; 3/1/0 points."""
    q1 = sorted((p.q for p in team1.players), reverse=True)
    q2 = sorted((p.q for p in team2.players), reverse=True)
    goals1 = sum(a > b for a, b in zip(q1, q2))
    goals2 = sum(b > a for a, b in zip(q1, q2))
    if goals1 > goals2:
        return 3, 0
    if goals2 > goals1:
        return 0, 3
    return 1, 1


def round_robin(tn: int) -> list[list[tuple[int, int]]]:
    """Single round robin by the circle method; odd leagues get a bye each round."""
    slots: list = list(range(tn)) + ([None] if tn % 2 else [])
    m = len(slots)
    rounds = []
    for _ in range(m - 1):
        pairs = [(slots[i], slots[m - 1 - i]) for i in range(m // 2)]
        rounds.append([(a, b) for a, b in pairs if a is not None and b is not None])
        slots = [slots[0], slots[-1]] + slots[1:-1]
    return rounds


def standings(league: League, gen: np.random.Generator) -> list[int]:
    """Team indices, first to last: points, then strength, then a random draw."""
    tie = gen.random(len(league.teams))
    return sorted(range(len(league.teams)),
                  key=lambda t: (-league.teams[t].points, -league.teams[t].tq, tie[t]))


def transfer_period(league: League, table: list[int]) -> League:
    """Rank-r team of the bottom half sends its r-th best player up for the r-th worst."""
    tn = len(table)
    for r in range(1, tn // 2 + 1):
        top = league.teams[table[r - 1]]
        bottom = league.teams[table[tn - r]]
        rr = min(r, len(top.players), len(bottom.players))
        i_top = top.order()[len(top.players) - rr]
        i_bot = bottom.order()[rr - 1]
        top.players[i_top], bottom.players[i_bot] = bottom.players[i_bot], top.players[i_top]
    for t in league.teams:
        t.update_tq()
    return league


def special_transfer(league: League, team_idx: int, player_idx: int,
                     gen: np.random.Generator) -> League:
    """Swap a stalled player with a random player of a random other team."""
    others = [t for t in range(len(league.teams)) if t != team_idx]
    other = league.teams[others[int(gen.integers(len(others)))]]
    team = league.teams[team_idx]
    k = int(gen.integers(len(other.players)))
    team.players[player_idx], other.players[k] = other.players[k], team.players[player_idx]
    team.players[player_idx].stagnation = 0
    other.players[k].stagnation = 0
    return league


def fire_coaches(league: League, table: list[int], pool: tuple,
                 gen: np.random.Generator) -> League:
    """Bottom ``floor(tn/2)`` teams draw a new coach (repeats allowed)."""
    tn = len(table)
    for t in table[tn - tn // 2:]:
        league.teams[t].coach = pool[int(gen.integers(len(pool)))]
    return league


def _out_of_budget(search: Search, config: GbConfig) -> bool:
    return config.max_evaluations is not None and search.counter.count >= config.max_evaluations


def run_season(league: League, search: Search, config: GbConfig) -> League:
    problem, gen = search.problem, search.gen
    pool = config.move_pool(problem)
    kind = config.crossover_kind(problem)
    for t in league.teams:
        t.points = 0
    schedule = round_robin(len(league.teams))
    for _half in range(2):
        for day in schedule:
            for ti, team in enumerate(league.teams):
                for player in team.players:
                    training_session(player, team.coach, search)
                    if player.stagnation >= config.custom_threshold:
                        captain = team.players[team.captain_index(gen)]
                        custom_training(player, captain, search, kind)
                    if _out_of_budget(search, config):
                        break
                for k in range(len(team.players)):
                    if team.players[k].stagnation >= config.special_threshold:
                        special_transfer(league, ti, k, gen)
            for t in league.teams:
                t.update_tq()
            for a, b in day:
                pa, pb = play_match(league.teams[a], league.teams[b])
                league.teams[a].points += pa
                league.teams[b].points += pb
        table = standings(league, gen)
        transfer_period(league, table)
        fire_coaches(league, table, pool, gen)
    league.season += 1
    return league


def check_termination(league: League, search: Search) -> bool:
    """Stop when strength, captain quality and the best solution all failed to improve."""
    now = (league.sum_tq(), league.sum_captains(), search.best_f)
    prev = league.snapshot
    league.history.append(now)
    league.snapshot = now
    return now[0] <= prev[0] and now[1] <= prev[1] and not now[2] < prev[2]


def run(problem, config: GbConfig | None = None, seed: int = 0, keep_trace: bool = False,
        algorithm: str = "GB") -> RunRecord:
    """One GB trial; fully determined by ``(problem, config, seed)``."""
    config = config or GbConfig.for_problem(problem)
    t0 = time.perf_counter()
    search = Search(problem, RngStream(seed).gen, keep_trace)
    league = initialize_league(search, config)
    while True:
        run_season(league, search, config)
        if check_termination(league, search):
            break
        if config.max_seasons is not None and league.season >= config.max_seasons:
            break
        if _out_of_budget(search, config):
            break
    return search.record(algorithm, seed, time.perf_counter() - t0, league.season)
