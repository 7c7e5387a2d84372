// Declarations for the HTTP-handler fixtures, written in the supported
// declaration subset.

interface Request {
  body: any;
  headers: Object;
  method: string;
  url: string;
}

interface NextApiRequest extends Request {
  query: Object;
  cookies: Object;
}

interface ServerResponse {
  statusCode: number;
  end(data?: any): void;
}

interface NextApiResponse extends ServerResponse {
  status(code: number): NextApiResponse;
  json(payload: any): void;
  send(payload?: any): void;
  redirect(url: string): NextApiResponse;
}

declare class DocumentClient {
  query(params: Object, callback?: Function): Object;
  get(params: Object, callback?: Function): Object;
  put(params: Object, callback?: Function): Object;
  scan(params: Object, callback?: Function): Object;
}
