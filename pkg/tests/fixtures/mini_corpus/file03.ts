const handler = (req: Request, res: Response) => {
  const path: string = req.url;
  res.send(path);
};
