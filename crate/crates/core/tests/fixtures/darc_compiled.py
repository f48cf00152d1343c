import numpy as np
from typing import *
(black, blue, red, green, yellow, grey, pink, orange, teal, maroon) = range(10)

def get_max_score_center(centers: List[Tuple[int, int]], scores: np.ndarray) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
    max_score = np.max(scores)
    max_centers = [centers[i] for i in range(len(centers)) if scores[i] == max_score]
    other_centers = [centers[i] for i in range(len(centers)) if scores[i] < max_score]
    return (max_centers, other_centers)


def find_positions_without_grey_neighbors(input: np.ndarray) -> List[Tuple[int, int]]:
    positions = []
    for i in range(1, input.shape[0]-1):
        for j in range(1, input.shape[1]-1):
            if np.all(input[i-1:i+2, j-1:j+2] != grey):
                positions.append((i, j))
    return positions


def make_neighbors_yellow(input: np.ndarray, positions: List[Tuple[int, int]]) -> np.ndarray:
    for position in positions:
        input[position[0]-1:position[0]+2, position[1]-1:position[1]+2] = yellow
    return input


def make_neighbors_black(input: np.ndarray, positions: List[Tuple[int, int]]) -> np.ndarray:
    for position in positions:
        input[position[0] - 1:position[0] + 2, position[1] - 1:position[1] + 2] = black
    return input


def count_yellow_neighbors(input: np.ndarray, centers: List[Tuple[int, int]]) -> np.ndarray:
    scores = np.zeros(len(centers))
    for i, position in enumerate(centers):
        scores[i] = np.sum(input[position[0] - 1:position[0] + 2, position[1] - 1:position[1] + 2] == yellow)
    return scores


def main(input):
    centers = find_positions_without_grey_neighbors(input)
    scores = count_yellow_neighbors(input, centers)
    center_yellow, center_black = get_max_score_center(centers, scores)
    output = make_neighbors_yellow(input, center_yellow)
    output = make_neighbors_black(output, center_black)
    return output
