// Core builtin declarations preloaded into every registry.
// Restricted to the declaration subset: no generics, no overloads.

interface Object {
  toString(): string;
  hasOwnProperty(name: string): boolean;
  valueOf(): Object;
}

interface String extends Object {
  length: number;
  charAt(index: number): string;
  concat(other: string): string;
  indexOf(search: string, position?: number): number;
  slice(start?: number, end?: number): string;
  split(separator: string, limit?: number): Array;
  toLowerCase(): string;
  toUpperCase(): string;
  trim(): string;
  replace(pattern: string, replacement: string): string;
  includes(search: string, position?: number): boolean;
}

interface Number extends Object {
  toFixed(digits?: number): string;
  toPrecision(precision?: number): string;
}

interface Boolean extends Object {
}

interface Array extends Object {
  length: number;
  push(item: any): number;
  pop(): any;
  shift(): any;
  unshift(item: any): number;
  slice(start?: number, end?: number): Array;
  splice(start: number, count?: number): Array;
  concat(other: Array): Array;
  join(separator?: string): string;
  indexOf(search: any, fromIndex?: number): number;
  includes(search: any): boolean;
  forEach(callback: Function): void;
  map(callback: Function): Array;
  filter(callback: Function): Array;
  reduce(callback: Function, initial?: any): any;
  find(callback: Function): any;
  some(callback: Function): boolean;
  every(callback: Function): boolean;
}

interface Function extends Object {
  length: number;
  name: string;
  apply(thisArg: any, args?: Array): any;
  call(thisArg: any): any;
  bind(thisArg: any): Function;
}

interface Promise extends Object {
  then(onFulfilled: Function, onRejected?: Function): Promise;
  catch(onRejected: Function): Promise;
  finally(onFinally: Function): Promise;
}

interface Error extends Object {
  name: string;
  message: string;
  stack: string;
}

interface Date extends Object {
  getTime(): number;
  getFullYear(): number;
  toISOString(): string;
}

interface RegExp extends Object {
  source: string;
  flags: string;
  test(input: string): boolean;
  exec(input: string): Array;
}

interface Map extends Object {
  size: number;
  get(key: any): any;
  set(key: any, value: any): Map;
  has(key: any): boolean;
  delete(key: any): boolean;
  clear(): void;
}

interface Set extends Object {
  size: number;
  add(value: any): Set;
  has(value: any): boolean;
  delete(value: any): boolean;
  clear(): void;
}

interface JSON {
  parse(text: string, reviver?: Function): any;
  stringify(value: any, replacer?: Function, space?: any): string;
}

interface Console {
  log(message?: any, extra?: any): void;
  error(message?: any, extra?: any): void;
  warn(message?: any, extra?: any): void;
  info(message?: any, extra?: any): void;
}
