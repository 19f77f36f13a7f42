export interface Store<S, E> {
  getState(): S;
  dispatch(event: E): void;
  subscribe(cb: (s: S) => void): () => void;
}

export function createStore<S, E>(
  initial: S,
  reducer: (state: S, event: E) => S,
): Store<S, E> {
  let state = initial;
  const listeners = new Set<(s: S) => void>();

  return {
    getState: () => state,
    dispatch: (event: E) => {
      const next = reducer(state, event);
      if (next !== state) {
        state = next;
        for (const cb of listeners) cb(state);
      }
    },
    subscribe: (cb) => {
      listeners.add(cb);
      return () => listeners.delete(cb);
    },
  };
}
