#!/usr/bin/env python3
"""Regenerates the grids and scenarios in this directory."""
import itertools
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent


def carve(dims, boxes):
    nx, ny, nz = dims
    free = set()
    for (x0, x1), (y0, y1), (z0, z1) in boxes:
        for i, j, k in itertools.product(range(x0, x1 + 1), range(y0, y1 + 1), range(z0, z1 + 1)):
            if 0 <= i < nx and 0 <= j < ny and 0 <= k < nz:
                free.add((i, j, k))
    walls = set()
    for i, j, k in free:
        for di, dj, dk in itertools.product((-1, 0, 1), repeat=3):
            c = (i + di, j + dj, k + dk)
            if c not in free and 0 <= c[0] < nx and 0 <= c[1] < ny and 0 <= c[2] < nz:
                walls.add(c)
    cells = [{"index": list(c), "state": "free"} for c in sorted(free)]
    cells += [{"index": list(c), "state": "occupied"} for c in sorted(walls)]
    return {"format_version": 1, "dims": list(dims), "resolution": 1.0, "origin": [0.0, 0.0, 0.0], "cells": cells}


def write(name, doc):
    (HERE / name).write_text(json.dumps(doc, indent=1) + "\n")


def field_analog():
    dims = (40, 24, 3)
    z = (0, 2)
    boxes = [
        ((1, 38), (10, 13), z),   # main drift
        ((6, 8), (14, 22), z),    # north crosscuts
        ((18, 20), (14, 22), z),
        ((31, 33), (14, 22), z),
        ((12, 14), (1, 9), z),    # south crosscuts
        ((25, 27), (1, 9), z),
    ]
    write("field_analog_grid.json", carve(dims, boxes))
    agents = [
        {"id": "R1", "start": [2.5, 11.5, 0.5], "home": [2.5, 11.5, 0.5]},
        {"id": "R2", "start": [10.5, 12.5, 0.5], "home": [10.5, 12.5, 0.5]},
        {"id": "R3", "start": [22.5, 11.5, 0.5], "home": [22.5, 11.5, 0.5]},
    ]
    tasks = [
        {"id": "T1", "location": [7.5, 20.5, 1.5]},
        {"id": "T2", "location": [13.5, 3.5, 1.5]},
        {"id": "T3", "location": [19.5, 20.5, 1.5]},
        {"id": "T4", "location": [26.5, 3.5, 1.5]},
        {"id": "T5", "location": [32.5, 20.5, 1.5]},
        {"id": "T6", "location": [37.5, 12.5, 1.5]},
    ]
    scenario = {
        "format_version": 1,
        "name": "field_analog",
        "grid": "field_analog_grid.json",
        "agents": agents,
        "tasks": tasks,
        "injections": [{"at": 116.0, "task": {"id": "T7", "location": [37.5, 10.5, 1.5]}}],
        "comms": {"drop_prob": 0.0, "latency_s": 0.1},
        "timing": {"dt": 0.1, "auction_rate": 1.0, "idle_timeout": 30.0, "dwell_time": 3.0,
                   "goal_tolerance": 0.5, "time_cap": 1800.0},
        "seed": 7,
    }
    write("field_analog.json", scenario)


def corridor():
    write("corridor_grid.json", carve((12, 3, 3), [((0, 11), (1, 1), (0, 2))]))
    write("corridor.json", {
        "format_version": 1,
        "name": "corridor",
        "grid": "corridor_grid.json",
        "agents": [{"id": "R1", "start": [0.5, 1.5, 0.5], "home": [0.5, 1.5, 0.5]}],
        "tasks": [{"id": "T1", "location": [5.5, 1.5, 1.5]}],
        "timing": {"idle_timeout": 5.0},
        "seed": 1,
    })


def unreachable():
    # Two chambers with no connection; the second one holds a task.
    grid = carve((16, 5, 3), [((0, 6), (1, 3), (0, 2)), ((10, 15), (1, 3), (0, 2))])
    write("unreachable_grid.json", grid)
    write("unreachable.json", {
        "format_version": 1,
        "name": "unreachable",
        "grid": "unreachable_grid.json",
        "agents": [{"id": "R1", "start": [1.5, 2.5, 0.5], "home": [1.5, 2.5, 0.5]}],
        "tasks": [
            {"id": "T1", "location": [5.5, 2.5, 1.5]},
            {"id": "T2", "location": [13.5, 2.5, 1.5]},
        ],
        "timing": {"idle_timeout": 5.0},
        "seed": 3,
    })


def libraries():
    actions = [
        {"name": "Set home location", "pre": [], "post": ["Has home location"]},
        {"name": "Arm", "pre": [], "post": ["Is armed"]},
        {"name": "Set offboard mode", "pre": [], "post": ["Is in offboard mode"]},
        {"name": "Takeoff", "pre": ["Has home location", "Is armed", "Is in offboard mode"],
         "post": ["Is flying"]},
        {"name": "Follow path", "pre": ["Has path", "Is flying"], "post": ["At goal point"]},
        {"name": "Update path", "pre": [], "post": ["Has path"]},
    ]
    write("action_library.json", {"format_version": 1, "actions": actions})
    write("action_library_cyclic.json", {"format_version": 1, "actions": [
        {"name": "Open hatch", "pre": ["Is flying"], "post": ["Hatch open"]},
        {"name": "Takeoff", "pre": ["Hatch open"], "post": ["Is flying"]},
    ]})
    write("action_library_ambiguous.json", {"format_version": 1, "actions": [
        {"name": "Arm", "pre": [], "post": ["Is armed"]},
        {"name": "Force arm", "pre": [], "post": ["Is armed"]},
    ]})


if __name__ == "__main__":
    field_analog()
    corridor()
    unreachable()
    libraries()
